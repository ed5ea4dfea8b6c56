fn main() -> std::process::ExitCode {
    fairalign::cli::main()
}
