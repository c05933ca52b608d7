use std::io::Write;

fn main() {
    let workers = std::env::var(revlab::cli::WORKERS_ENV).ok();
    let out = revlab::cli::main_with(std::env::args_os(), workers.as_deref());
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    std::process::exit(out.exit_code);
}
