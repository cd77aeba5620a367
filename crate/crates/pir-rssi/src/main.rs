fn main() {
    std::process::exit(pir_rssi::cli::main());
}
