fn main() {
    let target = std::env::var("TARGET").unwrap_or_default();
    let profile = std::env::var("PROFILE").unwrap_or_default();
    println!("cargo:rustc-env=HLL_BUILD_INFO={target}, {profile}");
    println!("cargo:rerun-if-changed=build.rs");
}
