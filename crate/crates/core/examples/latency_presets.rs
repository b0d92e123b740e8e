//! Runs the shipped device/cloud presets and compares CPU with the
//! hardware-accelerated configuration.

use strkit::io::presets;
use strkit::sim::{branch_latency, per_word_recognition_ms, simulate, str_latency_hidden, STR_BRANCH};

pub struct Comparison {
    pub str_cpu_ms: f64,
    pub str_ha_ms: f64,
    pub speedup: f64,
    pub energy_ratio: f64,
    pub per_word_ms: f64,
    pub hidden_on_ha: bool,
    pub hidden_on_cpu: bool,
}

pub fn run_example() -> strkit::Result<Comparison> {
    let cpu = presets::cpu();
    let ha = presets::ha();
    let str_cpu_ms = branch_latency(&cpu, STR_BRANCH)?;
    let str_ha_ms = branch_latency(&ha, STR_BRANCH)?;
    let recognition = ha.stage("recognition").expect("preset has a recognition stage");
    Ok(Comparison {
        str_cpu_ms,
        str_ha_ms,
        speedup: str_cpu_ms / str_ha_ms,
        energy_ratio: simulate(&cpu)?.energy_mwh / simulate(&ha)?.energy_mwh,
        per_word_ms: per_word_recognition_ms(ha.latency_of(recognition)?, ha.word_count)?,
        hidden_on_ha: str_latency_hidden(&ha)?.hidden,
        hidden_on_cpu: str_latency_hidden(&cpu)?.hidden,
    })
}

fn main() -> strkit::Result<()> {
    let c = run_example()?;
    println!("STR latency: CPU {:.0} ms, accelerated {:.0} ms ({:.1}x)", c.str_cpu_ms, c.str_ha_ms, c.speedup);
    println!("STR energy ratio: {:.2}x", c.energy_ratio);
    println!("recognition per word crop: {:.2} ms", c.per_word_ms);
    println!("hidden behind image transfer: CPU {}, accelerated {}", c.hidden_on_cpu, c.hidden_on_ha);
    let ha = simulate(&presets::ha())?;
    println!("accelerated end-to-end: {:.0} ms via {}", ha.e2e_ms, ha.critical_path.join(" -> "));
    Ok(())
}
