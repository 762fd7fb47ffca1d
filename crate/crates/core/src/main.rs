fn main() {
    wellposed::harness::cli::main();
}
