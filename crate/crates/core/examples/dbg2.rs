use loczeta::chars::FChar;
use loczeta::cnum::{unity, C64, C_ONE};
use loczeta::integrate::{mult_shell, pair_shell};
use loczeta::matrix::Mat2;
use loczeta::padic::{ExtKind, FieldContext, Fp};
use loczeta::section::{FSection, FSectionKind, SplitSectionPair};
use std::sync::atomic::{AtomicU64, Ordering};

static EVALS: AtomicU64 = AtomicU64::new(0);

fn main() {
    let ctx = FieldContext::new(3, 40, ExtKind::Split, 4).unwrap();
    let chi1 = (unity(1, 16), unity(5, 16));
    let chi2 = (unity(3, 16), unity(11, 16));
    let s = C64::new(0.1, 0.2);
    let pair = SplitSectionPair {
        phi1: FSection { chi1: FChar::unramified(chi1.0), chi2: FChar::unramified(chi2.0), kind: FSectionKind::FullK },
        phi2: FSection { chi1: FChar::unramified(chi1.1), chi2: FChar::unramified(chi2.1), kind: FSectionKind::FullK },
    };
    let _ = C_ONE;
    let v = 12i64;
    for n in [0i64, 4, 8, 11, 12] {
        let l = v - n;
        for k in [0i64, l, l + 3] {
            EVALS.store(0, Ordering::Relaxed);
            let t0 = std::time::Instant::now();
            let r = mult_shell(&ctx, n, &|a1: &Fp| {
                pair_shell(&ctx, l, k, &|a2: &Fp, m: &Fp| {
                    EVALS.fetch_add(1, Ordering::Relaxed);
                    let b: Mat2<Fp> = Mat2::new(a1.clone(), m.clone(), ctx.zero(), a2.clone());
                    let det = a1.mul(a2);
                    pair.eval_gamma0_with_det(&ctx, s, &b, Some(&det))
                })
            });
            eprintln!(
                "n={n} l={l} k={k}: ok={} evals={} [{} ms]",
                r.is_ok(),
                EVALS.load(Ordering::Relaxed),
                t0.elapsed().as_millis()
            );
        }
    }
}
