fn main() {
    let report = bisimkit::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(report.exit_code);
}
