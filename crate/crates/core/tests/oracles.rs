//! Closed-form values computed independently of the library.

use diagcopula_core::entropy::{
    aggregate_g, aggregate_i, aggregate_j, block_entropies, entropy_closed, entropy_of,
};
use diagcopula_core::sampler::delta_inverse;
use diagcopula_core::{make_family, CopulaModel, Diagonal, FamilySpec, KernelTable, SplicePiece};

const LN2: f64 = std::f64::consts::LN_2;

fn model(spec: FamilySpec, d: usize) -> CopulaModel {
    CopulaModel::build(make_family(&spec, d).unwrap()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Density of the piecewise-linear example on `u ≤ v`, region by region.
fn plinear_density(alpha: f64, u: f64, v: f64) -> f64 {
    let (u, v) = (u.min(v), u.max(v));
    let a = alpha;
    if v < a || u >= 1.0 - a {
        0.0
    } else if u < a && v < 1.0 - a {
        (1.0 / (2.0 * a)) * ((a - v) / (2.0 * a)).exp()
    } else if u >= a && v < 1.0 - a {
        (1.0 / (4.0 * a)) * ((u - v) / (2.0 * a)).exp()
    } else if u < a {
        (1.0 / a) * ((2.0 * a - 1.0) / (2.0 * a)).exp()
    } else {
        (1.0 / (2.0 * a)) * ((u + a - 1.0) / (2.0 * a)).exp()
    }
}

fn power_density(alpha: f64, u: f64, v: f64) -> f64 {
    let (u, v) = (u.min(v), u.max(v));
    let a = alpha;
    let e = 2.0 * a - 2.0;
    a / 4.0 * (2.0 - a * u.powf(a - 1.0)) / (1.0 - u.powf(a - 1.0)).powf(a / e)
        * v.powf(a - 2.0)
        * (1.0 - v.powf(a - 1.0)).powf((2.0 - a) / e)
}

#[test]
fn plinear_matches_region_formulas() {
    for alpha in [0.2, 0.35, 0.5] {
        let m = model(FamilySpec::PiecewiseLinear { alpha }, 2);
        let n = 101;
        let mut worst = 0.0f64;
        for i in 1..n {
            for j in 1..n {
                let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                // nodes on region boundaries take one-sided values
                if [alpha, 1.0 - alpha]
                    .iter()
                    .any(|b| (u - b).abs() < 1e-12 || (v - b).abs() < 1e-12)
                {
                    continue;
                }
                let want = plinear_density(alpha, u, v);
                let got = m.density_at(&[u, v]);
                if want == 0.0 {
                    assert_eq!(got, 0.0, "alpha={alpha} ({u}, {v})");
                } else {
                    worst = worst.max(rel(got, want));
                }
            }
        }
        assert!(
            worst < 1e-9,
            "alpha={alpha}: worst relative error {worst:e}"
        );
    }
}

#[test]
fn plinear_half_is_two_off_the_diagonal_blocks() {
    let m = model(FamilySpec::PiecewiseLinear { alpha: 0.5 }, 2);
    for (u, v, want) in [
        (0.2, 0.7, 2.0),
        (0.9, 0.1, 2.0),
        (0.2, 0.3, 0.0),
        (0.6, 0.95, 0.0),
    ] {
        let got = m.density_at(&[u, v]);
        assert!((got - want).abs() < 1e-9, "({u}, {v}): {got}");
    }
}

#[test]
fn power_matches_closed_form() {
    let alpha = 2f64.powf(1.0 / 3.0);
    let m = model(FamilySpec::Power { alpha }, 2);
    let n = 102;
    let mut worst = 0.0f64;
    for i in 1..n {
        for j in 1..n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            worst = worst.max(rel(m.density_at(&[u, v]), power_density(alpha, u, v)));
        }
    }
    assert!(worst < 1e-9, "{worst:e}");
}

#[test]
fn fgm_primitive() {
    for theta in [-1.0, -0.3, 0.4, 1.0] {
        let k = KernelTable::build(make_family(&FamilySpec::Fgm { theta }, 2).unwrap()).unwrap();
        let f = |r: f64| {
            let base = 0.5 * (r / (1.0 - r)).ln();
            if theta > 0.0 {
                let s = (4.0 * theta - theta * theta).sqrt();
                base + theta / s * ((2.0 * theta * r - theta) / s).atan()
            } else {
                let s = (theta * theta - 4.0 * theta).sqrt();
                base - theta / s * ((2.0 * theta * r - theta) / s).atanh()
            }
        };
        for r in [1e-9, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9] {
            assert!(
                (k.f_at(r) - f(r)).abs() < 1e-9 * f(r).abs().max(1.0),
                "theta={theta} r={r}"
            );
        }
    }
}

#[test]
fn gaussian_value_at_one_half() {
    // P(X ≤ 0, Y ≤ 0) for a standard bivariate normal
    for rho in [-0.95, -0.5, 0.0, 0.5, 0.95] {
        let s = make_family(&FamilySpec::Gaussian { rho }, 2).unwrap();
        let want = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        assert!((s.eval(0.5) - want).abs() < 1e-13, "rho={rho}");
    }
}

#[test]
fn squares_entropy() {
    let r = entropy_closed(&model(FamilySpec::Power { alpha: 2.0 }, 2)).unwrap();
    assert!((r.j - 2.0).abs() < 1e-9);
    assert!((r.g + 2.0).abs() < 1e-9);
    assert!(r.i_closed.abs() < 1e-9);
}

#[test]
fn plinear_entropy() {
    let a: f64 = 0.2;
    let j = 2.0 * (a - a * a.ln()) - (1.0 - 2.0 * a) * a.ln();
    let g = 4.0 * a * LN2 - 2.0 * LN2 - 1.0;
    let r =
        entropy_of(&make_family(&FamilySpec::PiecewiseLinear { alpha: a }, 2).unwrap()).unwrap();
    assert!((r.j - j).abs() < 1e-9 && (r.g - g).abs() < 1e-9);
    assert!((r.i_closed - (j + g)).abs() < 1e-9);
}

#[test]
fn power_entropy_in_three_dimensions() {
    // δ = t³ is the diagonal of the trivariate independence copula
    let r = entropy_closed(&model(FamilySpec::Power { alpha: 3.0 }, 3)).unwrap();
    // J = ∫ −log t − log(1 − t²) = 1 + (2 − 2 log 2)
    assert!((r.j - (3.0 - 2.0 * LN2)).abs() < 1e-9, "{}", r.j);
    assert!(r.i_closed.abs() < 1e-9, "{}", r.i_closed);
}

fn square_splice(cuts: &[f64]) -> FamilySpec {
    let sq = FamilySpec::Power { alpha: 2.0 };
    FamilySpec::Spliced {
        pieces: cuts
            .windows(2)
            .map(|w| SplicePiece {
                lo: w[0],
                hi: w[1],
                inner: sq.clone(),
            })
            .collect(),
    }
}

#[test]
fn three_block_splice_aggregation() {
    let m = model(square_splice(&[0.0, 0.25, 0.5, 1.0]), 2);
    let want_j = 2.0 + 0.5 * 4f64.ln() + 0.5 * LN2;
    let r = entropy_closed(&m).unwrap();
    assert!((r.j - want_j).abs() < 1e-8, "{}", r.j);
    let blocks = block_entropies(&m).unwrap();
    assert!((aggregate_j(&blocks) - want_j).abs() < 1e-8);
    assert!((aggregate_g(&blocks) + 2.0).abs() < 1e-8);
    assert!((aggregate_i(&blocks, 2) - r.i_closed).abs() < 1e-8);
}

#[test]
fn splice_in_three_dimensions_scales_by_width_squared() {
    let m = model(
        FamilySpec::Spliced {
            pieces: vec![
                SplicePiece {
                    lo: 0.0,
                    hi: 0.5,
                    inner: FamilySpec::Power { alpha: 3.0 },
                },
                SplicePiece {
                    lo: 0.5,
                    hi: 1.0,
                    inner: FamilySpec::Power { alpha: 3.0 },
                },
            ],
        },
        3,
    );
    // each block carries a uniform density on its cube of volume 1/8 and mass 1/2
    assert!((m.density_at(&[0.1, 0.2, 0.3]) - 4.0).abs() < 1e-9);
    assert_eq!(m.density_at(&[0.1, 0.2, 0.7]), 0.0);
    let r = entropy_closed(&m).unwrap();
    assert!((r.i_closed - 4f64.ln()).abs() < 1e-8, "{}", r.i_closed);
    let blocks = block_entropies(&m).unwrap();
    assert!((aggregate_i(&blocks, 3) - 4f64.ln()).abs() < 1e-8);
    assert!((aggregate_j(&blocks) - r.j).abs() < 1e-8);
}

#[test]
fn inverse_diagonal_examples() {
    let sq = make_family(&FamilySpec::Power { alpha: 2.0 }, 2).unwrap();
    assert!((delta_inverse(&sq, 0.25) - 0.5).abs() < 1e-12);
    assert_eq!(delta_inverse(&sq, 1.0), 1.0);
    let pl = make_family(&FamilySpec::PiecewiseLinear { alpha: 0.2 }, 2).unwrap();
    assert!((delta_inverse(&pl, 0.3) - 0.5).abs() < 1e-12);
}
