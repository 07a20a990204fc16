use ergorate::models::{sample_invariant, ModelSpec, PotentialSpec, Simulator, State, WrightFisherVariant};
use ergorate::rng::seeded;
use ergorate::subordinator::BernsteinSpec;
use rand::Rng;

fn quadratic() -> PotentialSpec {
    PotentialSpec { theta: 1.0, tau: 1.0 }
}

/// Mean and standard error from `batches` contiguous batch means.
fn batch_mean(xs: &[f64], batches: usize) -> (f64, f64) {
    let size = xs.len() / batches;
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

#[test]
fn sphere_velocity_stays_on_the_sphere() {
    let spec = ModelSpec::Spherical { n: 3, sigma: std::f64::consts::SQRT_2, potential: quadratic() };
    let sim = Simulator::new(&spec).unwrap();
    let mut rng = seeded(1);
    let mut state = State::new(vec![0.5, -0.3, 0.1, 0.0, 0.6, 0.8]);
    for _ in 0..100_000 {
        state = sim.step(&state, 1e-3, &mut rng).unwrap().state;
        let norm: f64 = state.coords[3..].iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9, "velocity norm {norm}");
    }
}

#[test]
fn wright_fisher_stays_in_the_simplex() {
    for variant in [WrightFisherVariant::Mutation, WrightFisherVariant::Diagonal] {
        let spec = ModelSpec::WrightFisher { q: vec![1.0, 1.5, 2.0], variant };
        let sim = Simulator::new(&spec).unwrap();
        let mut rng = seeded(2);
        let mut state = State::new(vec![0.2, 0.3]);
        for _ in 0..100_000 {
            state = sim.step(&state, 1e-3, &mut rng).unwrap().state;
            let total: f64 = state.coords.iter().sum();
            assert!(state.coords.iter().all(|&x| x >= 0.0) && total <= 1.0, "{:?}", state.coords);
        }
    }
}

#[test]
fn degenerate_interval_stays_in_unit_interval() {
    let sim = Simulator::new(&ModelSpec::DegenerateInterval { l: 3.0 }).unwrap();
    let mut rng = seeded(3);
    let mut state = State::new(vec![0.9]);
    for _ in 0..10_000 {
        state = sim.step(&state, 1e-3, &mut rng).unwrap().state;
        assert!((0.0..=1.0).contains(&state.coords[0]));
    }
}

#[test]
fn hamiltonian_velocity_variance_is_inverse_kappa() {
    let kappa = 2.0;
    let spec = ModelSpec::Hamiltonian { n: 1, m: 1, kappa, coupling: None, potential: quadratic() };
    let sim = Simulator::new(&spec).unwrap();
    let mut rng = seeded(4);
    let mut state = State::new(vec![0.0, 0.0]);
    for _ in 0..20_000 {
        state = sim.step(&state, 1e-3, &mut rng).unwrap().state;
    }
    let mut sq = Vec::with_capacity(400_000);
    for _ in 0..400_000 {
        state = sim.step(&state, 1e-3, &mut rng).unwrap().state;
        sq.push(state.coords[1] * state.coords[1]);
    }
    let (mean, se) = batch_mean(&sq, 40);
    let target = 1.0 / kappa;
    assert!((mean - target).abs() <= 4.0 * se + 0.01, "E[v^2] = {mean} +- {se}");
}

#[test]
fn wright_fisher_time_average_matches_dirichlet_mean() {
    let q = vec![1.0, 2.0, 1.5];
    let total: f64 = q.iter().sum();
    let spec = ModelSpec::WrightFisher { q: q.clone(), variant: WrightFisherVariant::Mutation };
    let sim = Simulator::new(&spec).unwrap();
    let mut rng = seeded(5);
    let mut state = State::new(vec![0.3, 0.3]);
    let mut xs = Vec::with_capacity(300_000);
    for _ in 0..300_000 {
        state = sim.step(&state, 1e-3, &mut rng).unwrap().state;
        xs.push(state.coords[0]);
    }
    let (mean, se) = batch_mean(&xs[10_000..], 29);
    assert!((mean - q[0] / total).abs() <= 4.0 * se + 0.01, "mean {mean} +- {se}");
}

#[test]
fn dirichlet_sampler_moments() {
    let mut rng = seeded(6);
    for _ in 0..5 {
        let k = rng.random_range(2..5);
        let q: Vec<f64> = (0..k).map(|_| rng.random_range(1.0..4.0)).collect();
        let total: f64 = q.iter().sum();
        let spec = ModelSpec::WrightFisher { q: q.clone(), variant: WrightFisherVariant::Mutation };
        let draws: Vec<State> = (0..20_000).map(|_| sample_invariant(&spec, &mut rng).unwrap()).collect();
        for i in 0..k - 1 {
            let mean_i = q[i] / total;
            let var_i = mean_i * (1.0 - mean_i) / (total + 1.0);
            let est = draws.iter().map(|s| s.coords[i]).sum::<f64>() / draws.len() as f64;
            let se = (var_i / draws.len() as f64).sqrt();
            assert!((est - mean_i).abs() <= 4.0 * se, "q={q:?} coord {i}: {est} vs {mean_i}");
        }
    }
}

#[test]
fn identity_clock_is_the_base_process() {
    let spec = ModelSpec::Hamiltonian { n: 2, m: 2, kappa: 1.5, coupling: None, potential: quadratic() };
    let sim = Simulator::new(&spec).unwrap();
    let x0 = State::new(vec![0.1, -0.4, 0.3, 0.2]);
    let times: Vec<f64> = (1..=50).map(|k| k as f64 * 0.1).collect();
    let base = sim.simulate_base(&x0, &times, 1e-3, &mut seeded(7)).unwrap();
    let sub = sim
        .simulate_subordinated(&BernsteinSpec::Identity, &x0, &times, 1e-3, &mut seeded(7))
        .unwrap();
    assert_eq!(base, sub);
}
