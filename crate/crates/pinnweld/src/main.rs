fn main() {
    std::process::exit(pinnweld::run_cli());
}
