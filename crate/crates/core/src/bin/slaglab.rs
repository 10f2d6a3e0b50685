fn main() -> std::process::ExitCode {
    slaglab::cli::main()
}
