use std::io::Write;

fn main() {
    let out = qlst::cli::main_with_args(std::env::args_os());
    std::io::stdout().write_all(out.stdout.as_bytes()).ok();
    if !out.stderr.is_empty() {
        eprintln!("{}", out.stderr);
    }
    std::process::exit(out.code);
}
