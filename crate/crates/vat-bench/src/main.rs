fn main() {
    let code = vat_bench::cli::main_with(std::env::args_os());
    std::process::exit(code);
}
