//! The `gen-data` subcommand: seeded dataset files in LIBSVM text format.

use std::path::Path;

use unixgrad::data::{generate_ls, generate_two_class, SyntheticLsParams, TwoClassParams};

pub struct GenDataArgs {
    pub kind: String,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub entry_sigma: f64,
    pub noise_variance: f64,
    pub separation: f64,
}

pub fn cmd_gen_data(args: &GenDataArgs, out: &Path) -> anyhow::Result<()> {
    let text = match args.kind.as_str() {
        "synthetic-ls" => {
            let (instance, _) = generate_ls(&SyntheticLsParams {
                n: args.n,
                d: args.d,
                entry_sigma: args.entry_sigma,
                noise_variance: args.noise_variance,
                radius: Some(1.0),
                boundary: false,
                boundary_shrink: 0.8,
                seed: args.seed,
            })?;
            // dense regression rows: "b_i 1:a_i1 2:a_i2 ..."
            let mut text = String::new();
            for i in 0..args.n {
                text.push_str(&format!("{}", instance.b[i]));
                for j in 0..args.d {
                    text.push_str(&format!(" {}:{}", j + 1, instance.a[[i, j]]));
                }
                text.push('\n');
            }
            text
        }
        "libsvm" => {
            let dataset = generate_two_class(&TwoClassParams {
                n: args.n,
                d: args.d,
                separation: args.separation,
                raw_labels: (2.0, 4.0),
                seed: args.seed,
            })?;
            dataset.to_libsvm_text()
        }
        other => anyhow::bail!("unknown dataset kind `{other}` (expected synthetic-ls or libsvm)"),
    };
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(out, text)?;
    println!("wrote {}", out.display());
    Ok(())
}
