fn main() {
    std::process::exit(f2comb::cli::main_entry());
}
