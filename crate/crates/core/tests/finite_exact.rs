//! Exact checks of the finite engine against hand computations and against
//! independently constructed oracles.

use enlargement::finite_prob::drift::{
    compensator, cond_exp, drift_operator, is_martingale, martingale_from_terminal,
    representation_process, with_connector_drift,
};
use enlargement::finite_prob::planted::{
    cox_time, independent_coin, plant_degenerate, plant_viable, PlantConfig, PlantedModel,
};
use enlargement::finite_prob::solve::{deflated_defect, deflator, solve_accessible};
use enlargement::finite_prob::structure::{
    check_positivity, fit_canonical, fit_phi_n, kernel_identity_defect, multiplier_drift,
    structure_from_phi, viability_condition,
};
use enlargement::finite_prob::{
    AdaptedProcess, EnlargedPair, FiniteError, FiniteFilteredSpace, Filtration, Partition, Rational,
    Scalar,
};
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn q(n: i64, d: i64) -> Rational {
    Rational::from_ratio(n, d)
}

fn planted(seed: u64) -> PlantedModel {
    plant_viable(&mut ChaCha8Rng::seed_from_u64(seed), &PlantConfig::default())
}

/// Oracle: `E[x | block]` computed by brute-force summation over atoms.
fn brute_cond_exp(probs: &[Rational], x: &[Rational], part: &Partition) -> Vec<Rational> {
    (0..part.n_blocks())
        .map(|b| {
            let (mut m, mut s) = (Rational::zero(), Rational::zero());
            for a in 0..probs.len() {
                if part.block_of(a) == b {
                    m += probs[a].clone();
                    s += probs[a].clone() * x[a].clone();
                }
            }
            s / m
        })
        .collect()
}

/// Oracle for the enlarged drift: `E[ΔX_k | G_{k-1}]` summed by brute force,
/// independent of the compensator code path.
fn brute_drift(pair: &EnlargedPair<Rational>, x: &AdaptedProcess<Rational>) -> Vec<Vec<Rational>> {
    let bf = pair.base_filtration();
    let probs = pair.base().probs();
    (1..=bf.horizon())
        .map(|k| brute_cond_exp(probs, &x.increment_atoms(bf, k), pair.fine().partition(k - 1)))
        .collect()
}

#[test]
fn early_reveal_drift_matches_hand_computation() {
    // F sees a coin at epoch 2, G already at epoch 1.
    let p = q(1, 3);
    let base = Filtration::new(vec![Partition::trivial(2), Partition::trivial(2), Partition::discrete(2)]).unwrap();
    let fine = Filtration::new(vec![Partition::trivial(2), Partition::discrete(2), Partition::discrete(2)]).unwrap();
    let space = FiniteFilteredSpace::new(vec![p.clone(), q(1, 1) - p.clone()], base).unwrap();
    let pair = EnlargedPair::new(space, fine).unwrap();
    let x = martingale_from_terminal(pair.base(), &[q(1, 1) - p.clone(), -p.clone()]);
    let gamma = drift_operator(&pair, &x).unwrap();
    assert_eq!(gamma.epoch_values(1), &[q(0, 1), q(0, 1)]);
    assert_eq!(gamma.epoch_values(2), &[q(2, 3), q(-1, 3)]);
    let tilde = x.lift(pair.base_filtration(), pair.fine()).unwrap().minus(&gamma);
    assert!(tilde.blocks().iter().flatten().all(|v| v.is_zero()));
}

#[test]
fn drift_operator_rejects_non_martingales() {
    let m = planted(1);
    let bf = m.pair.base_filtration().clone();
    let t = AdaptedProcess::from_atoms(&bf, &(0..=bf.horizon()).map(|k| vec![q(k as i64, 1); bf.n_atoms()]).collect::<Vec<_>>()).unwrap();
    if bf.horizon() > 0 {
        assert!(matches!(drift_operator(&m.pair, &t), Err(FiniteError::NotMartingale { epoch: 1, .. })));
    }
}

#[test]
fn no_enlargement_has_zero_drift() {
    let m = planted(2);
    let pair = EnlargedPair::trivial(m.pair.base().clone());
    for x in representation_process(pair.base()) {
        let g = drift_operator(&pair, &x).unwrap();
        assert!(g.blocks().iter().flatten().all(|v| v.is_zero()));
    }
}

#[test]
fn hypothesis_h_models_have_zero_drift() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for i in 0..40 {
        let pair = if i % 2 == 0 {
            independent_coin(&mut rng, &PlantConfig::default())
        } else {
            cox_time(&mut rng, &PlantConfig::default())
        };
        for x in representation_process(pair.base()) {
            let g = drift_operator(&pair, &x).unwrap();
            assert!(g.blocks().iter().flatten().all(|v| v.is_zero()), "model {i}");
        }
    }
}

#[test]
fn single_epoch_closed_form() {
    // Two cells, p = (1/3, 2/3); the enlarged filtration knows a signal
    // tilting the kernel by 1 + φ n_h. Check ΔY against the closed form.
    let p = [q(1, 3), q(2, 3)];
    let n = [q(2, 3), q(-1, 3)]; // centred: 1/3 * 2/3 - 2/3 * 1/3 = 0
    let phi = [q(3, 8), q(-3, 4)]; // per signal; prior (2/3, 1/3) centres it
    let prior = [q(2, 3), q(1, 3)];
    let d = [q(1, 4), q(-1, 8)];
    let mut probs = Vec::new();
    let mut cell_labels = Vec::new();
    let mut signal_labels = Vec::new();
    for h in 0..2 {
        for s in 0..2 {
            probs.push(p[h].clone() * prior[s].clone() * (q(1, 1) + phi[s].clone() * n[h].clone()));
            cell_labels.push(h);
            signal_labels.push(s);
        }
    }
    let base = Filtration::new(vec![Partition::trivial(4), Partition::from_labels(&cell_labels)]).unwrap();
    let fine = Filtration::new(vec![Partition::from_labels(&signal_labels), Partition::discrete(4)]).unwrap();
    let pair = EnlargedPair::new(FiniteFilteredSpace::new(probs, base).unwrap(), fine).unwrap();
    let bf = pair.base_filtration().clone();
    let n_proc = AdaptedProcess::from_atoms(&bf, &[vec![q(0, 1); 4], cell_labels.iter().map(|&h| n[h].clone()).collect()]).unwrap();
    let d_proc = AdaptedProcess::from_atoms(&bf, &[vec![q(0, 1); 4], cell_labels.iter().map(|&h| d[h].clone()).collect()]).unwrap();

    let w = representation_process(pair.base());
    let gammas: Vec<_> = w.iter().map(|x| drift_operator(&pair, x).unwrap()).collect();
    let sd = fit_phi_n(&pair, &w, &gammas, vec![n_proc]).unwrap();
    for (g, s) in [(0usize, 0usize), (1, 1)] {
        assert_eq!(sd.phi[1][g], vec![phi[s].clone()], "fine block {g}");
    }
    let sol = solve_accessible(&pair, &sd, Some(&d_proc)).unwrap();
    #[allow(clippy::needless_range_loop)]
    for g in 0..2 {
        let kern = &sd.kernels[1][g];
        for (h, &cell) in kern.cells.iter().enumerate() {
            let phin = phi[g].clone() * n[cell].clone();
            let expected = (d[cell].clone() + phin.clone()) / (q(1, 1) + phin);
            assert_eq!(sol.jumps[1][g][h], expected);
            // ⟨K, (ε_h − p̄)⟩ / 2 reproduces the same jump.
            let pbar = &kern.p_bar;
            let v: Vec<Rational> = (0..sol.k[1][g].len())
                .map(|i| {
                    let e = if i == h { q(1, 1) } else { q(0, 1) };
                    (e - pbar.get(i).cloned().unwrap_or_default()) / q(2, 1)
                })
                .collect();
            let inner = v.iter().zip(&sol.k[1][g]).fold(q(0, 1), |acc, (a, b)| acc + a.clone() * b.clone());
            assert_eq!(inner, expected);
        }
    }
}

#[test]
fn planted_models_satisfy_every_exact_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..60 {
        let m = plant_viable(&mut rng, &PlantConfig::default());
        let pair = &m.pair;
        let w = representation_process(pair.base());
        let gammas: Vec<_> = w.iter().map(|x| drift_operator(pair, x).unwrap()).collect();
        // Γ computed by compensator agrees with the brute-force oracle.
        for (x, g) in w.iter().zip(&gammas) {
            let brute = brute_drift(pair, x);
            for k in 1..=pair.fine().horizon() {
                for f in 0..pair.fine().partition(k).n_blocks() {
                    let parent = pair.fine().parent(k, f);
                    let inc = g.value(k, f).clone() - g.value(k - 1, parent).clone();
                    assert_eq!(inc, brute[k - 1][parent], "model {i}");
                }
            }
        }
        // Planted multiplier reproduces Γ on the spanning family.
        let planted_sd = structure_from_phi(pair, m.n.clone(), m.phi.clone()).unwrap();
        let sd = fit_phi_n(pair, &w, &gammas, m.n.clone()).unwrap();
        for (x, g) in w.iter().zip(&gammas) {
            assert_eq!(&multiplier_drift(pair, &planted_sd, x), g, "planted, model {i}");
            assert_eq!(&multiplier_drift(pair, &sd, x), g, "fitted, model {i}");
        }
        assert!(kernel_identity_defect(&planted_sd).is_none());
        assert!(kernel_identity_defect(&sd).is_none());
        let pos = check_positivity(&sd);
        assert!(pos.pass, "model {i}: {pos:?}");
        assert!(viability_condition(pair, &sd, Some(&m.connector)).pass);

        for connector in [None, Some(&m.connector)] {
            let sol = solve_accessible(pair, &sd, connector).unwrap();
            assert!(sol.jumps.iter().flatten().flatten().all(|y| *y < Rational::one()));
            assert!(sol.deflator.blocks().iter().flatten().all(|v| v.is_strictly_positive()));
            // Oracle: the jump of Y is (ΔD + φ·ΔN)/(1 + φ·ΔN), cell by cell.
            for k in 1..sd.kernels.len() {
                for kern in &sd.kernels[k] {
                    let phin = sd.phi_dot_n(k, kern.fine_block);
                    for (h, &c) in kern.cells.iter().enumerate() {
                        let dd = connector.map_or(q(0, 1), |d| d.value(k, c).clone() - d.value(k - 1, kern.base_block).clone());
                        let expected = (dd + phin[h].clone()) / (q(1, 1) + phin[h].clone());
                        assert_eq!(sol.jumps[k][kern.fine_block][h], expected);
                    }
                }
            }
            for x in &w {
                let special = match connector {
                    Some(d) => with_connector_drift(pair.base(), x, d),
                    None => x.clone(),
                };
                assert!(deflated_defect(pair, &sol.deflator, &special).unwrap().is_none(), "model {i}");
            }
        }
    }
}

#[test]
fn float_mode_agrees_within_tolerance() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let m = plant_viable(&mut rng, &PlantConfig::default());
        let pair = m.pair.map_scalar(|v| v.to_f64()).unwrap();
        let n: Vec<_> = m.n.iter().map(|p| p.map(|v| v.to_f64())).collect();
        let w = representation_process(pair.base());
        let gammas: Vec<_> = w.iter().map(|x| drift_operator(&pair, x).unwrap()).collect();
        let sd = fit_phi_n(&pair, &w, &gammas, n).unwrap();
        assert!(kernel_identity_defect(&sd).is_none());
        let d = m.connector.map(|v| v.to_f64());
        let sol = solve_accessible(&pair, &sd, Some(&d)).unwrap();
        for x in &w {
            let special = with_connector_drift(pair.base(), x, &d);
            assert!(deflated_defect(&pair, &sol.deflator, &special).unwrap().is_none());
        }
    }
}

#[test]
fn degenerate_cell_is_flagged_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let m = plant_degenerate(&mut rng, &PlantConfig::default());
        let sd = fit_canonical(&m.pair).unwrap();
        let pos = check_positivity(&sd);
        assert!(!pos.pass);
        assert!(!pos.set_equality_violations.is_empty());
        assert_eq!(pos.min_value.as_deref(), Some("0"));
        let via = viability_condition(&m.pair, &sd, None);
        assert!(!via.pass && via.failure.is_some());
        assert!(matches!(solve_accessible(&m.pair, &sd, None), Err(FiniteError::SetEqualityFails { .. })));
    }
}

fn arb_model() -> impl Strategy<Value = PlantedModel> {
    any::<u64>().prop_map(planted)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tower_property(m in arb_model(), seed in any::<u64>()) {
        let space = m.pair.base();
        let filt = space.filtration();
        let k = filt.horizon();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi: Vec<Rational> = (0..space.n_atoms()).map(|_| q(rand::Rng::random_range(&mut rng, -9..=9), 1)).collect();
        let x = martingale_from_terminal(space, &xi);
        for j in 0..=k {
            for i in 0..=j {
                let direct = cond_exp(space, &x, k, i).unwrap();
                let via_j = space.cond_exp(&cond_exp(space, &x, k, j).unwrap(), filt.partition(j), filt.partition(i)).unwrap();
                prop_assert_eq!(&direct, &via_j);
                prop_assert_eq!(&direct, &brute_cond_exp(space.probs(), &xi, filt.partition(i)));
            }
        }
    }

    #[test]
    fn compensated_process_is_martingale(m in arb_model()) {
        let space = m.pair.base();
        let a = m.n[0].times(&m.n[0]);
        prop_assert!(is_martingale(space, &a.minus(&compensator(space, &a))));
        prop_assert!(compensator(space, &a).is_predictable(space.filtration()));
    }

    #[test]
    fn drift_operator_is_linear(m in arb_model(), a in -5i64..5, b in -5i64..5) {
        let w = representation_process(m.pair.base());
        let x = &w[0];
        let y = &m.connector;
        let combo = x.scaled(&q(a, 1)).plus(&y.scaled(&q(b, 2)));
        let lhs = drift_operator(&m.pair, &combo).unwrap();
        let rhs = drift_operator(&m.pair, x).unwrap().scaled(&q(a, 1))
            .plus(&drift_operator(&m.pair, y).unwrap().scaled(&q(b, 2)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn kernels_are_probabilities(m in arb_model()) {
        let sd = fit_canonical(&m.pair).unwrap();
        prop_assert!(kernel_identity_defect(&sd).is_none());
        for kern in sd.kernels.iter().flatten() {
            let total_p = kern.p.iter().cloned().fold(q(0, 1), |a, b| a + b);
            let total_pb = kern.p_bar.iter().cloned().fold(q(0, 1), |a, b| a + b);
            prop_assert_eq!(total_p, q(1, 1));
            prop_assert_eq!(total_pb, q(1, 1));
        }
    }

    #[test]
    fn bracket_is_filtration_invariant(m in arb_model()) {
        let bf = m.pair.base_filtration();
        let lifted = m.connector.lift(bf, m.pair.fine()).unwrap();
        prop_assert_eq!(m.connector.quadratic_variation(bf), lifted.quadratic_variation(m.pair.fine()));
    }

    #[test]
    fn deflator_positive_iff_jumps_below_one(m in arb_model(), factor in 1i64..8) {
        let bf = m.pair.base_filtration();
        let d = m.connector.scaled(&q(factor, 2));
        let max_jump = (1..=bf.horizon())
            .flat_map(|k| d.increment_atoms(bf, k))
            .fold(q(-100, 1), |a, b| if b > a { b } else { a });
        match deflator(bf, &d) {
            Ok(l) => {
                prop_assert!(max_jump < q(1, 1));
                prop_assert!(l.blocks().iter().flatten().all(|v| v.is_strictly_positive()));
                prop_assert!(l.epoch_values(0).iter().all(|v| v.is_one()));
            }
            Err(_) => prop_assert!(max_jump >= q(1, 1)),
        }
    }
}
