fn main() {
    std::process::exit(audio_ensemble::harness::cli_main(std::env::args_os()));
}
