use ricciwarp_core::general::*;
use ricciwarp_core::tensor::PrescribedTensor;
fn main() {
    let tensor = PrescribedTensor::perturbed_family(3, 4, 0.1).unwrap();
    let opts = GeneralOptions::default();
    let bound = tensor.c1_lower_bound();
    println!("bound = {bound:.4}, c1_start = {:.4}", 4.0 * bound);
    // S as solve_general would realize it
    let s = 1.1 * 1.4392; // placeholder; compute via probe below
    let _ = s;
    match continue_in_c1(4.0 * bound, 1.0, 1.5, &tensor, &opts) {
        Ok(cont) => {
            println!("ok: c1_hat={:.8} last.c1={:.8} c2={:.6} gamma={:.6} sig={:.4}",
                cont.c1_hat, cont.last.c1, cont.last.c2, cont.last.gamma, cont.collapse_signature());
            println!("steps: {}", cont.log.steps.len());
            for s in cont.log.steps.iter().rev().take(4) {
                println!("  c1={:.8} c2={:.6} g={:.6} z_end={:.4} res=({:.1e},{:.1e})", s.c1, s.c2, s.gamma, s.z1_end, s.res_bc, s.res_sup);
            }
            let probes = &cont.log.c1_probes;
            println!("probes: {} (last 6):", probes.len());
            for p in probes.iter().rev().take(6) {
                println!("  {:.10} {}", p.0, p.1);
            }
        }
        Err(e) => {
            println!("ERR {e}");
        }
    }
}
