use augcast::data::WindowData;
use augcast::kernel::Matrix;
use augcast::model::{backward, forward, ForwardMode, ModelConfig, ModelParams};
use augcast::train::{nll_loss_backward, nll_loss};
use rand::Rng;
use std::time::Instant;

fn bench(label: &str, cfg: &ModelConfig, t: usize, iters: usize) {
    let params = ModelParams::<f64>::init(cfg, 1).unwrap();
    let mut rng = augcast::rng::stream(2, "perf", 0);
    let w = WindowData {
        instance: 0,
        inputs: Matrix::from_vec(t, 3, (0..t * 3).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap(),
        targets: (0..t).map(|_| rng.random::<f64>()).collect(),
        scale: 1.0,
        context_len: t - 24,
        horizon_len: 24,
    };
    let mask: Vec<bool> = (0..t).map(|i| i >= t - 24).collect();
    // forward only
    let t0 = Instant::now();
    for _ in 0..iters {
        let (out, _) = forward(&params, cfg, &w, ForwardMode::Eval).unwrap();
        std::hint::black_box(out.mu[0]);
    }
    let fwd = t0.elapsed().as_secs_f64() / iters as f64;
    // fwd + bwd
    let t1 = Instant::now();
    for i in 0..iters {
        let (out, cache) = forward(&params, cfg, &w, ForwardMode::Train { rng: &mut augcast::rng::stream(3, "d", i as u64) }).unwrap();
        let loss = nll_loss(&out.mu, &out.sigma, &w.targets, &mask).unwrap();
        let (dmu, dsg) = nll_loss_backward(&out.mu, &out.sigma, &w.targets, &mask);
        let mut grads = params.zeros_like();
        backward(&params, cfg, &w, cache.as_ref().unwrap(), &dmu, &dsg, &mut grads).unwrap();
        std::hint::black_box(loss);
    }
    let both = t1.elapsed().as_secs_f64() / iters as f64;
    println!("{label}: t={t} fwd {:.1} ms, fwd+bwd {:.1} ms", fwd * 1e3, both * 1e3);
}

fn main() {
    let default_cfg = ModelConfig { num_instances: 50, ..ModelConfig::default() };
    bench("default(w80,L3,H8,d10,drop0.1)", &default_cfg, 192, 20);
    let bench_cfg = ModelConfig { heads: 4, d_k: 8, d_v: 8, ff_dim: 32, embed_dim: 5, blocks: 2, num_instances: 20, ..ModelConfig::default() };
    bench("bench(w32,L2,H4,d8)", &bench_cfg, 192, 40);
}
