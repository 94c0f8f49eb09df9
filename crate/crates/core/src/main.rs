fn main() {
    std::process::exit(iris_ldpc::cli::main());
}
