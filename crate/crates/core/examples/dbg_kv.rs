use kvstar_core::kv::solve_affine;
use kvstar_core::rat::{rat, ratio};
fn main() {
    let a = vec![
        vec![rat(0), rat(1), rat(-1), rat(0)],
        vec![rat(0), rat(1), rat(1), rat(0)],
        vec![rat(1), rat(0), rat(0), rat(1)],
    ];
    let b = vec![ratio(1, 2), rat(0), rat(0)];
    let (x, ker) = solve_affine(a, b).unwrap();
    println!("particular: {:?}", x.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    for k in &ker {
        println!("kernel: {:?}", k.iter().map(|v| v.to_string()).collect::<Vec<_>>());
    }
}
