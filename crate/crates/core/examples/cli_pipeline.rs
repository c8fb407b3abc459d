//! Drives the command-line entry point in-process: synthesize a pattern, then
//! measure it back from the written grid.

fn main() {
    let out = std::env::temp_dir().join("waveleton-cli-example");
    let out = out.to_string_lossy().into_owned();
    let code = waveleton::cli::run([
        "waveleton", "--out", &out, "synth", "--matrix", "band:8,5,1", "--level", "6", "--size", "512",
    ]);
    println!("synth exit code {code}");
    let grid = format!("{out}/pattern.wgrd");
    let code = waveleton::cli::run(["waveleton", "--out", &format!("{out}/measured"), "metrics", "--input", &grid, "--filter", "symmlet8", "--levels", "6"]);
    println!("metrics exit code {code}");
    println!("{}", std::fs::read_to_string(format!("{out}/measured/metrics.json")).unwrap_or_default());
}
