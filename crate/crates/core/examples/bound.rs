use pim_core::bounds::{mixing_condition, pmax_bound, support_bound, support_size, t_min, theorem1_sample_size, BoundInputs};

fn main() -> pim_core::Result<()> {
    for m in 0..=5 {
        println!("M = {m}: |chi| = {} (bound {})", support_size(m).0, support_bound(m));
    }
    println!("pmax(eps' = 0.2, M = 1) = {}", pmax_bound(0.2, 1));
    println!("t_min(9, 2) = {}", t_min(9, 2));

    let (value, ok) = mixing_condition(0.4, 0.4, 0.8);
    println!("ring/line setting: mixing value {value:.2}, satisfied = {ok}");

    // a contracting setting where the sample-size branch applies
    let b = BoundInputs {
        m_bar: 1,
        v_size: 10,
        gamma: 0.1,
        epsilon: 0.2,
        epsilon_prime: 0.2,
        delta: 0.001,
        delta_prime: 0.001,
        c: 1.0,
        c1: 0.0005,
        alpha_exp: 0.5,
        beta1: 0.75,
        d: 5,
        mu_bar: 0.1,
        lipschitz: 0.1,
        rho: 0.5,
    };
    let r = theorem1_sample_size(&b)?;
    println!("{}", serde_json::to_string_pretty(&r).unwrap());
    Ok(())
}
