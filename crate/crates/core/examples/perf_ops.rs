use augcast::kernel::*;
use augcast::model::attention_head;
use rand::Rng;
use std::time::Instant;

fn m(r: usize, c: usize, rng: &mut impl Rng) -> Matrix<f64> {
    Matrix::from_vec(r, c, (0..r*c).map(|_| rng.random::<f64>()-0.5).collect()).unwrap()
}

fn time(label: &str, iters: usize, mut f: impl FnMut() -> f64) {
    let t0 = Instant::now();
    let mut acc = 0.0;
    for _ in 0..iters { acc += f(); }
    let dt = t0.elapsed().as_secs_f64()/iters as f64;
    println!("{label:<42} {:.3} ms  (acc {acc:.1})", dt*1e3);
}

fn main() {
    let mut rng = augcast::rng::stream(1, "p", 0);
    let t = 192; let w = 80; let d = 10; let ff = 40;
    let y = m(t, w, &mut rng);
    let wq = m(w, d, &mut rng);
    let q = m(t, d, &mut rng);
    let k = m(t, d, &mut rng);
    let p_tri = {
        let logits = m(t, t, &mut rng);
        masked_softmax(&logits, &CausalMask::new(t)).unwrap()
    };
    let v = m(t, d, &mut rng);
    let u = m(t, w, &mut rng);
    let pw = m(w, w, &mut rng);
    let w1 = m(w, ff, &mut rng);
    let w2 = m(ff, w, &mut rng);
    let b1 = vec![0.1; ff]; let b2 = vec![0.1; w];
    let dp = m(t, t, &mut rng);

    time("qkv proj matmul(y,wq) x3", 100, || { let a = matmul(&y,&wq).unwrap(); let b = matmul(&y,&wq).unwrap(); let c = matmul(&y,&wq).unwrap(); a.data()[0]+b.data()[0]+c.data()[0] });
    time("attention_head full (per head)", 100, || attention_head(&y, &wq, &wq, &m(w,d,&mut rng), Some(&CausalMask::new(t))).unwrap().data()[0]);
    time("masked_softmax(t x t)", 100, || masked_softmax(&dp, &CausalMask::new(t)).unwrap().data()[0]);
    time("masked_softmax_backward", 100, || masked_softmax_backward(&p_tri, &dp).data()[0]);
    time("proj matmul(u, pw 80x80)", 100, || matmul(&u,&pw).unwrap().data()[0]);
    time("transpose(pw)", 100, || pw.transpose().data()[0]);
    time("ff fwd (cached)", 100, || feedforward_cached(&u,&w1,&b1,&w2,&b2).unwrap().0.data()[0]);
    time("layer_norm_rows", 100, || layer_norm_rows(&u, &vec![1.0;w], &vec![0.0;w], 1e-5).0.data()[0]);
    time("matmul_atb(y, q) [dw]", 100, || matmul_atb(&y,&q).unwrap().data()[0]);
    time("matmul_atb(p_tri, v) [dv-unmasked]", 100, || matmul_atb(&p_tri,&v).unwrap().data()[0]);
    time("matmul(dq, wq^T)", 100, || matmul(&q, &wq.transpose()).unwrap().data()[0]);
    time("dropout_mask t x t", 100, || dropout_mask::<f64>(t,t,0.1,&mut rng).data()[0]);
    let _ = (&k, &p_tri);
}
