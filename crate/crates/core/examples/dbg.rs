use loczeta::cnum::{unity, C64, C_ONE};
use loczeta::engine::*;
use loczeta::padic::{ExtKind, FieldContext};

fn main() {
    // U-INERT at p=3
    let ctx = FieldContext::new(3, 40, ExtKind::Inert, 2).unwrap();
    let chi1 = unity(1, 8);
    let chi2 = unity(3, 8) * 1.0;
    let mu1 = unity(1, 12) * 1.0;
    let mu2 = C_ONE / (mu1 * chi1 * chi2);
    let case = UnramCase::new_inert(ctx, chi1, chi2, mu1, mu2).unwrap();
    let s = C64::new(0.1, 0.2);
    for v in 0..=4i64 {
        let o = oracle_i_unram_at(&case, v, 20, s).unwrap();
        let c = closed_i_unram(&case, s, v).unwrap();
        println!("I v={v}: oracle {o:.9}, closed {c:.9}, rel {:.2e}", (o - c).norm() / c.norm());
    }
    for (w_re, w_im) in [(0.5, 0.0), (0.6, 0.0)] {
        let pt = EvalPoint::new(s, C64::new(w_re, w_im));
        let t0 = std::time::Instant::now();
        let po = oracle_p_unram(&case, &pt).unwrap();
        let pc = closed_p_inert(&case, s, pt.w).unwrap();
        println!(
            "P w={w_re}: oracle {po:.9}, closed {pc:.9}, rel {:.2e} [{} ms]",
            (po - pc).norm() / pc.norm(),
            t0.elapsed().as_millis()
        );
    }
    // U-SPLIT at p=3
    let ctxs = FieldContext::new(3, 40, ExtKind::Split, 4).unwrap();
    let chi1 = (unity(1, 16), unity(5, 16));
    let chi2 = (unity(3, 16), unity(11, 16));
    let mu1 = unity(1, 12);
    let mu2 = C_ONE / (mu1 * chi1.0 * chi1.1 * chi2.0 * chi2.1);
    let cs = UnramCase::new_split(ctxs, chi1, chi2, mu1, mu2).unwrap();
    for v in 0..=4i64 {
        let o = oracle_i_unram_at(&cs, v, 20, s).unwrap();
        let c = closed_i_unram(&cs, s, v).unwrap();
        println!("split I v={v}: rel {:.2e}", (o - c).norm() / c.norm());
    }
    let pt = EvalPoint::new(s, C64::new(0.6, 0.0));
    let po = oracle_p_unram(&cs, &pt).unwrap();
    let pc = closed_p_split(&cs, s, pt.w).unwrap();
    println!("split P: rel {:.2e}", (po - pc).norm() / pc.norm());
    // R1 at p=3
    let ctxr = FieldContext::new(3, 40, ExtKind::Ramified, 3).unwrap();
    let chi1e = unity(1, 8);
    let chi2e = unity(3, 8);
    let mu1 = unity(5, 12);
    let mu2 = C_ONE / (mu1 * (chi1e * chi2e).powi(2));
    let cr = UnramCase::new_ramified(ctxr, chi1e, chi2e, mu1, mu2).unwrap();
    for v in 0..=4i64 {
        let o = oracle_i_unram_at(&cr, v, 20, s).unwrap();
        let c = closed_i_unram(&cr, s, v).unwrap();
        println!("ram I v={v}: rel {:.2e}", (o - c).norm() / c.norm());
    }
    let po = oracle_p_unram(&cr, &pt).unwrap();
    let pc = closed_p_ramified(&cr, s, pt.w).unwrap();
    println!("ram P: rel {:.2e}", (po - pc).norm() / pc.norm());
}
