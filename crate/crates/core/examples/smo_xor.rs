//! Trains an RBF SVM on XOR with SMO and prints the multipliers, the dual
//! objective and the decision surface on a coarse grid.
//!
//! cargo run -p cryscreen --example smo_xor

use cryscreen::svm::{dual_objective, smo_solve, smo_train};
use cryscreen::{KernelSpec, Label, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let y = [Label::Normal, Label::Normal, Label::Asphyxia, Label::Asphyxia];
    let kernel = KernelSpec::Rbf { gamma: 1.0 };
    let cfg = TrainConfig {
        c: 10.0,
        ..TrainConfig::default()
    };

    let sol = smo_solve(&x, &y, &kernel, &cfg)?;
    println!(
        "alphas {:.4?}  bias {:.4}  passes {}  converged {}",
        sol.alphas, sol.bias, sol.passes, sol.converged
    );
    println!("dual objective {:.6}", dual_objective(&sol.alphas, &x, &y, &kernel));

    let model = smo_train(&x, &y, &kernel, &cfg)?;
    println!("decision values (rows y = 1.0 .. 0.0, columns x = 0.0 .. 1.0):");
    for j in (0..=4).rev() {
        let row: Vec<String> = (0..=4)
            .map(|i| {
                let p = [i as f64 / 4.0, j as f64 / 4.0];
                format!("{:+.2}", model.decision_value(&p).unwrap())
            })
            .collect();
        println!("  {}", row.join(" "));
    }
    Ok(())
}
