fn main() -> ! {
    igdiff::cli::main()
}
