//! Frozen-seed calibration runs for the constants in `multibeta::calibration`.
//!
//! `cargo run --release -p multibeta --example calibrate -- [reconstruct|holder|carleson]`

use std::time::Instant;

use multibeta::beta::{carleson_sum, Selector};
use multibeta::funcmodel::{FunctionField, TimeTerm};
use multibeta::geometry::{random_parabolic_boxes, AxisBox, DyadicCube};
use multibeta::parabolic::holder_exponent_check;
use multibeta::quadrature::QuadratureSpec;
use multibeta::reconstruct::{verify_form1, ReconstructParams};

fn reconstruct(seeds: &[u64], kappa_c: f64) {
    let quad = QuadratureSpec::default();
    println!("{}", multibeta::reconstruct::ReconstructionReport::CSV_HEADER);
    for n in 2..=3 {
        let q = AxisBox::cube(vec![0.0; n], 1.0).unwrap();
        let half = vec![0.5; n];
        let fields = [
            ("ridge", FunctionField::ridge_kink(n, 0, 0.5)),
            ("cone", FunctionField::cone(half.clone())),
            ("bump", FunctionField::bump(half.clone(), 0.5, 0.25)),
            ("random_ridge", FunctionField::random_ridge(n, 4, 7)),
        ];
        for (name, f) in fields {
            for &seed in seeds {
                let params = ReconstructParams { seed, kappa_c, ..ReconstructParams::default() };
                let t = Instant::now();
                let r = verify_form1(&f, &q, &params, &quad).unwrap();
                eprintln!(
                    "{name} n={n} seed={seed} {:.2?} ratio={:.4} accepted={} draw={} score/ref={:.3}",
                    t.elapsed(),
                    r.ratio,
                    r.selection.accepted,
                    r.selection.draw,
                    r.selection.score / r.selection.reference
                );
                println!("{}", r.csv_row());
            }
        }
    }
}

fn holder() {
    let psi = FunctionField::separable(FunctionField::cone(vec![0.0]), TimeTerm::Sin { amplitude: 1.0 });
    let space = AxisBox::cube(vec![-1.0], 2.0).unwrap();
    let boxes = random_parabolic_boxes(&space, 0.0, 1.0, 64, 1.0 / 64.0, 0.5, 7);
    let t = Instant::now();
    let r = holder_exponent_check(&psi, &boxes, 1.0, f64::INFINITY, &QuadratureSpec::default()).unwrap();
    println!("holder fitted constant {:.6} ({:.2?})", r.fitted_constant, t.elapsed());
}

fn carleson() {
    let quad = QuadratureSpec::default();
    let f1 = FunctionField::ridge_kink(1, 0, 1.0 / 3.0);
    let t = Instant::now();
    let r = carleson_sum(&f1, &DyadicCube::unit(1), 3.0, 10, Selector::Beta2, &quad).unwrap();
    println!("n=1 decay {:.4} ratios {:?} ({:.2?})", r.decay_ratio(3, 10), &r.ratios[4..], t.elapsed());
    let f2 = FunctionField::ridge_kink(2, 0, 1.0 / 3.0);
    let t = Instant::now();
    let r = carleson_sum(&f2, &DyadicCube::unit(2), 3.0, 6, Selector::Beta2, &quad).unwrap();
    println!("n=2 decay {:.4} ratios {:?} ({:.2?})", r.decay_ratio(3, 6), &r.ratios[4..], t.elapsed());
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "reconstruct".into());
    match which.as_str() {
        "reconstruct" => {
            let kappa_c = std::env::args().nth(2).map_or(multibeta::calibration::KAPPA_C, |s| s.parse().unwrap());
            reconstruct(&[1, 2, 3, 4, 5, 6, 7], kappa_c)
        }
        "holder" => holder(),
        "suite" => {
            let t = Instant::now();
            let r = multibeta::verify::run_suite(&Default::default(), &QuadratureSpec::default()).unwrap();
            print!("{}", r.to_csv());
            eprintln!("{:.2?}", t.elapsed());
        }
        "carleson" => carleson(),
        other => panic!("unknown calibration {other}"),
    }
}
