// scratch calibration probe (not part of the deliverable surface)
use dsbc_core::ion::{build_ion_dsbc_model, six_ion_demo, TargetKind, WaveKind};
use dsbc_core::lindblad::{evolve, IntegratorConfig, Probes};
use dsbc_core::model::{build_dsbc_model, build_initial_state, DsbcParams, InitialPattern};
use dsbc_core::parallel::map_indexed;
use dsbc_core::spinwave::xy_ground_state;

fn ideal_point(n: usize, n_s: usize, da: f64, gk: f64, t_f: f64, levels: usize) -> f64 {
    let params = DsbcParams::new(n, da, gk, gk, levels).unwrap();
    let model = build_dsbc_model(&params, 0.0, Some(n_s)).unwrap();
    let rho0 = build_initial_state(&params, n_s, &InitialPattern::LeftBlock, true).unwrap();
    let target = xy_ground_state(n, n_s, dsbc_core::spinwave::CouplingSign::Antiferromagnetic, 0.0).unwrap();
    let probes = Probes { target: Some(target), store_snapshots: false };
    let cfg = IntegratorConfig::sweep();
    let traj = evolve(&model, &rho0, &[0.0, t_f], &cfg, &probes).unwrap();
    traj.final_fidelity().unwrap()
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let mode = args.get(1).map(|s| s.as_str()).unwrap_or("ideal4");
    match mode {
        "ideal4" => {
            // landscape for the N=4 ideal chain, all fillings
            let das = [0.9, 1.0, 1.1, 1.118, 1.2, 1.236, 1.3];
            let gks = [0.03, 0.05, 0.08, 0.12];
            for n_s in 1..=3usize {
                println!("n_s = {}", n_s);
                for &da in &das {
                    let row: Vec<f64> = map_indexed(gks.len(), None, |k| {
                        ideal_point(4, n_s, da, gks[k], 1e3, 3)
                    });
                    let cells: Vec<String> = row.iter().map(|f| format!("{:.4}", f)).collect();
                    println!("  da={:.3}: {}", da, cells.join(" "));
                }
            }
        }
        "ion" => {
            let da: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.1);
            let gk: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.08);
            let zetas = [0.0, 0.1, 0.2];
            for wave in [WaveKind::Standing, WaveKind::Traveling] {
                for t_f in [100.0, 1000.0] {
                    let rows: Vec<Vec<f64>> = map_indexed(zetas.len(), None, |zi| {
                        let cfg = six_ion_demo(da, gk, gk, zetas[zi], wave, 5).unwrap();
                        (1..=3usize)
                            .map(|n_s| {
                                let bundle = build_ion_dsbc_model(&cfg, Some(n_s)).unwrap();
                                let rho0 = bundle.initial_state(n_s).unwrap();
                                let target = bundle.target(n_s, TargetKind::IdealNearestNeighbour).unwrap();
                                let probes = Probes { target: Some(target), store_snapshots: false };
                                let traj = evolve(
                                    &bundle.model,
                                    &rho0,
                                    &[0.0, t_f],
                                    &IntegratorConfig::sweep(),
                                    &probes,
                                )
                                .unwrap();
                                traj.final_fidelity().unwrap()
                            })
                            .collect()
                    });
                    println!("wave={:?} t_f={}:", wave, t_f);
                    for (zi, row) in rows.iter().enumerate() {
                        println!(
                            "  zeta={:.2}: n_s=1 {:.4}  n_s=2 {:.4}  n_s=3 {:.4}",
                            zetas[zi], row[0], row[1], row[2]
                        );
                    }
                }
            }
        }
        "fig4" => {
            let r2 = 2.0_f64.sqrt();
            let gks = [0.02, 0.033, 0.046, 0.053, 0.061, 0.07, 0.081, 0.094, 0.12];
            let rows: Vec<f64> = map_indexed(gks.len(), None, |k| {
                ideal_point(3, 1, r2, gks[k], 1e3, 3)
            });
            for (gk, f) in gks.iter().zip(rows.iter()) {
                println!("gk={:.3}: F={:.6} eps={:.2e}", gk, f, 1.0 - f);
            }
        }
        "diag" => {
            let cfg = six_ion_demo(1.1, 0.08, 0.08, 0.0, WaveKind::Standing, 5).unwrap();
            let bundle = build_ion_dsbc_model(&cfg, None).unwrap();
            let ju = bundle.derived.j_unit;
            // single-particle spectrum of the normalized hopping matrix 2 Jx/ju
            let n = 4;
            let mut t = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n { for j in 0..n { t[(i,j)] = 2.0*bundle.derived.coupling.jx[(i,j)]/ju; } }
            let eig = t.clone().symmetric_eigen();
            let mut e: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
            e.sort_by(|a,b| b.partial_cmp(a).unwrap());
            println!("single-particle energies: {:?}", e);
            let gaps: Vec<f64> = e.windows(2).map(|w| w[0]-w[1]).collect();
            println!("gaps: {:?}", gaps);
            println!("nn hops: {:.4} {:.4} {:.4}", t[(0,1)], t[(1,2)], t[(2,3)]);
            println!("j13/j12 = {:.4}, j14/j12 = {:.4}", t[(0,2)]/t[(0,1)], t[(0,3)]/t[(0,1)]);
            for n_s in 1..=3usize {
                let ideal = bundle.target(n_s, TargetKind::IdealNearestNeighbour).unwrap();
                let actual = bundle.target(n_s, TargetKind::ActualCoupling).unwrap();
                let ov = ideal.overlap(&actual).norm();
                println!("n_s={}: |<ideal|actual>|^2 = {:.5}", n_s, ov*ov);
            }
        }
        "ionscan" => {
            let mut combos: Vec<(f64, f64, f64)> = Vec::new();
            for da in [0.88, 0.92, 0.96, 1.0] {
                for g in [0.06, 0.08, 0.10] {
                    for k in [0.08, 0.10, 0.12] {
                        combos.push((da, g, k));
                    }
                }
            }
            let rows: Vec<Vec<f64>> = map_indexed(combos.len(), None, |ci| {
                let (da, g, k) = combos[ci];
                let cfg = six_ion_demo(da, g, k, 0.0, WaveKind::Standing, 5).unwrap();
                (1..=3usize)
                    .map(|n_s| {
                        let bundle = build_ion_dsbc_model(&cfg, Some(n_s)).unwrap();
                        let rho0 = bundle.initial_state(n_s).unwrap();
                        let target = bundle.target(n_s, TargetKind::IdealNearestNeighbour).unwrap();
                        let probes = Probes { target: Some(target), store_snapshots: false };
                        evolve(&bundle.model, &rho0, &[0.0, 1000.0], &IntegratorConfig::sweep(), &probes)
                            .unwrap()
                            .final_fidelity()
                            .unwrap()
                    })
                    .collect()
            });
            for ((da, g, k), row) in combos.iter().zip(rows.iter()) {
                let worst = row.iter().cloned().fold(f64::INFINITY, f64::min);
                println!("da={:.2} g={:.2} k={:.2}: {:.4} {:.4} {:.4}  worst {:.4}", da, g, k, row[0], row[1], row[2], worst);
            }
        }
        other => eprintln!("unknown mode {}", other),
    }
}
