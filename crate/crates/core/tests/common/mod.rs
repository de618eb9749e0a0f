#![allow(dead_code)]

use std::path::PathBuf;

use msic_core::Instance;

pub fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

pub fn load(name: &str) -> Instance {
    let text = std::fs::read_to_string(corpus(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    Instance::parse(&text).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The seeded randomized suite: 50 instances with K <= 4, N <= 3,
/// delta <= 0.5 and r0 <= 2.
pub fn random_suite() -> Vec<Instance> {
    (0..50u64)
        .map(|i| {
            let k = 2 + (i % 3) as usize;
            let n = 1 + ((i / 3) % 3) as usize;
            let delta = [0.0, 0.25, 0.5][((i / 9) % 3) as usize];
            let r0 = [0, 1, 2][((i / 2) % 3) as usize].min(k - 1);
            Instance::generate_random(k, n, delta, r0, 1000 + i).expect("suite parameters are feasible")
        })
        .collect()
}

/// Every valid instance with K <= 2 and N <= 2.
pub fn all_tiny_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for k in 1..=2usize {
        for n in 1..=2usize {
            let subsets: Vec<Vec<usize>> =
                (0..1u32 << k).map(|m| (0..k).filter(|&i| m >> i & 1 == 1).collect()).collect();
            let stores_count = subsets.len().pow(n as u32);
            for s in 0..stores_count {
                let stores: Vec<Vec<usize>> =
                    (0..n).map(|j| subsets[(s / subsets.len().pow(j as u32)) % subsets.len()].clone()).collect();
                for r in 0..subsets.len().pow(k as u32) {
                    let side: Vec<Vec<usize>> =
                        (0..k).map(|j| subsets[(r / subsets.len().pow(j as u32)) % subsets.len()].clone()).collect();
                    if let Ok(i) = Instance::new(k, n, stores.clone(), side) {
                        out.push(i);
                    }
                }
            }
        }
    }
    out
}
