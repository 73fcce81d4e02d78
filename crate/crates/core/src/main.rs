fn main() -> std::process::ExitCode {
    plansage::cli::run()
}
