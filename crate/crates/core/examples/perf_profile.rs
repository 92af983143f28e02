use augcast::data::WindowData;
use augcast::kernel::Matrix;
use augcast::model::{backward, forward, ForwardMode, ModelConfig, ModelParams};
use augcast::train::nll_loss_backward;
use rand::Rng;
use std::time::Instant;

fn main() {
    let cfg = ModelConfig { num_instances: 50, ..ModelConfig::default() };
    let params = ModelParams::<f64>::init(&cfg, 1).unwrap();
    let t = 192;
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
    let iters = 30;

    // forward train (with cache + dropout)
    let t0 = Instant::now();
    let mut keep = Vec::new();
    for i in 0..iters {
        let (out, cache) = forward(&params, &cfg, &w, ForwardMode::Train { rng: &mut augcast::rng::stream(3, "d", i) }).unwrap();
        keep.push((out, cache));
    }
    println!("fwd train+cache: {:.1} ms", t0.elapsed().as_secs_f64() / iters as f64 * 1e3);

    // train forward without dropout (caches only)
    let cfg0 = ModelConfig { dropout: 0.0, ..cfg.clone() };
    let t05 = Instant::now();
    for i in 0..iters {
        let (out, cache) = forward(&params, &cfg0, &w, ForwardMode::Train { rng: &mut augcast::rng::stream(3, "d", i) }).unwrap();
        std::hint::black_box((out.mu[0], cache.is_some()));
    }
    println!("fwd train nodrop: {:.1} ms", t05.elapsed().as_secs_f64() / iters as f64 * 1e3);

    // grads alloc
    let t1 = Instant::now();
    for _ in 0..iters { std::hint::black_box(params.zeros_like()); }
    println!("zeros_like: {:.2} ms", t1.elapsed().as_secs_f64() / iters as f64 * 1e3);

    // backward only (reuse caches)
    let mut grads = params.zeros_like();
    let t2 = Instant::now();
    for (out, cache) in &keep {
        let (dmu, dsg) = nll_loss_backward(&out.mu, &out.sigma, &w.targets, &mask);
        backward(&params, &cfg, &w, cache.as_ref().unwrap(), &dmu, &dsg, &mut grads).unwrap();
    }
    println!("bwd only: {:.1} ms", t2.elapsed().as_secs_f64() / iters as f64 * 1e3);

    // forward eval (no cache, no dropout)
    let t3 = Instant::now();
    for _ in 0..iters {
        let (out, _) = forward(&params, &cfg, &w, ForwardMode::Eval).unwrap();
        std::hint::black_box(out.mu[0]);
    }
    println!("fwd eval: {:.1} ms", t3.elapsed().as_secs_f64() / iters as f64 * 1e3);
}
