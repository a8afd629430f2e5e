use clap::Parser;

fn main() {
    let cli = pegraph_cli::Cli::parse();
    let code = pegraph_cli::run(cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
