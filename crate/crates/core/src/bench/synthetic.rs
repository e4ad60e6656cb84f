//! Seeded synthetic binary-classification tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};

use crate::data::{Cell, Column, ColumnKind, RawDataset};

/// Two interleaved Gaussian pairs: class 1 around (1, 1) and (−1, −1),
/// class 0 around (1, −1) and (−1, 1), each with standard deviation
/// `spread`. `noise_features` extra N(0, 1) columns carry no signal.
pub fn xor_gaussians(n: usize, spread: f64, noise_features: usize, seed: u64) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, spread).expect("finite spread");
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut features = vec![
        Column {
            name: "x1".into(),
            kind: ColumnKind::Continuous,
        },
        Column {
            name: "x2".into(),
            kind: ColumnKind::Continuous,
        },
    ];
    features.extend((0..noise_features).map(|k| Column {
        name: format!("noise{k}"),
        kind: ColumnKind::Continuous,
    }));
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for i in 0..n {
        let y = (i % 2) as f64;
        let sx: f64 = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let sy = if y == 1.0 { sx } else { -sx };
        let mut row = vec![
            Cell::Number(sx + jitter.sample(&mut rng)),
            Cell::Number(sy + jitter.sample(&mut rng)),
        ];
        row.extend((0..noise_features).map(|_| Cell::Number(unit.sample(&mut rng))));
        rows.push(row);
        targets.push(y);
    }
    RawDataset {
        features,
        target_name: "label".into(),
        rows,
        targets,
    }
}

/// A credit-approval-like table: five continuous and five categorical
/// columns with a logistic target dominated by a prior-default flag and
/// a credit score, plus one interaction.
pub fn credit_like(n: usize, seed: u64) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let debt = LogNormal::new(1.0, 0.8).expect("lognormal");
    let income = LogNormal::new(7.0, 1.2).expect("lognormal");
    let tenure = Exp::new(0.4).expect("rate");
    let cont = |name: &str| Column {
        name: name.into(),
        kind: ColumnKind::Continuous,
    };
    let cat = |name: &str| Column {
        name: name.into(),
        kind: ColumnKind::Categorical,
    };
    let features = vec![
        cont("age"),
        cont("debt"),
        cont("years_employed"),
        cont("credit_score"),
        cont("income"),
        cat("prior_default"),
        cat("employed"),
        Column {
            name: "education".into(),
            kind: ColumnKind::Ordinal,
        },
        cat("marital"),
        cat("citizen"),
    ];
    let education = ["primary", "secondary", "diploma", "bachelor", "master", "doctorate"];
    let mut rows = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let latent: f64 = z.sample(&mut rng);
        let age = (18.0 + 12.0 * (1.5 + 0.4 * latent + 0.6 * z.sample(&mut rng)).abs()).round();
        let years: f64 = tenure.sample(&mut rng) * (1.0 + 0.3 * latent).max(0.2);
        let score = (650.0 + 60.0 * latent + 40.0 * z.sample(&mut rng)).round();
        let d: f64 = debt.sample(&mut rng);
        let inc: f64 = income.sample(&mut rng);
        let inc = inc.round();
        let prior = rng.random_bool(if latent > 0.0 { 0.8 } else { 0.3 });
        let employed = rng.random_bool(0.45 + 0.1 * latent.clamp(-2.0, 2.0));
        let edu = rng.random_range(0..education.len());
        let marital = ["u", "y", "l"][rng.random_range(0..3)];
        let citizen = ["g", "p", "s"][usize::from(rng.random_bool(0.1)) + usize::from(rng.random_bool(0.05))];

        let score_z = (score - 650.0) / 72.0;
        let logit = -1.6 + 3.0 * f64::from(u8::from(prior)) + 1.1 * score_z + 0.25 * years.min(10.0) - 0.12 * d
            + 0.6 * f64::from(u8::from(employed))
            + 0.15 * (inc.ln() - 7.0)
            + 0.8 * f64::from(u8::from(prior)) * score_z
            + 0.1 * edu as f64;
        let p = 1.0 / (1.0 + (-logit).exp());
        targets.push(f64::from(u8::from(rng.random_bool(p))));
        rows.push(vec![
            Cell::Number(age),
            Cell::Number((d * 100.0).round() / 100.0),
            Cell::Number((years * 100.0).round() / 100.0),
            Cell::Number(score),
            Cell::Number(inc),
            Cell::Category(if prior { "t" } else { "f" }.into()),
            Cell::Category(if employed { "t" } else { "f" }.into()),
            Cell::Category(education[edu].into()),
            Cell::Category(marital.into()),
            Cell::Category(citizen.into()),
        ]);
    }
    RawDataset {
        features,
        target_name: "approved".into(),
        rows,
        targets,
    }
}
