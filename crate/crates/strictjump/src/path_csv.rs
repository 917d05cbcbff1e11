//! Path export.
//!
//! ```text
//! # x0=1.0000000000000000e0
//! # decay_rate=5.0000564189583547e-1
//! # eps=1.0000000000000000e-4
//! # exploded=false
//! # t_end=1.0000000000000000e0
//! time,size
//! 1.7339104235069211e-2,2.2912883466373155e-4
//! ```
//!
//! Exploded paths add `# explosion_time=`. Explosive paths whose truncation
//! level follows the state add `# eps_scaling=state`; their decay rate then
//! changes between events and `decay_rate` is the rate at the base level.

use std::fmt::Write as _;

use strictjump_core::Path;

use crate::report::fmt_f64;

pub fn path_to_csv(path: &Path) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# x0={}", fmt_f64(path.x0));
    let _ = writeln!(out, "# decay_rate={}", fmt_f64(path.decay_rate));
    let _ = writeln!(out, "# eps={}", fmt_f64(path.eps));
    let _ = writeln!(out, "# exploded={}", path.exploded);
    let _ = writeln!(out, "# t_end={}", fmt_f64(path.t_end));
    if let Some(tau) = path.explosion_time {
        let _ = writeln!(out, "# explosion_time={}", fmt_f64(tau));
    }
    if path.hit_max_events {
        out.push_str("# hit_max_events=true\n");
    }
    if path.has_varying_rate() {
        out.push_str("# eps_scaling=state\n");
    }
    out.push_str("time,size\n");
    for e in &path.events {
        let _ = writeln!(out, "{},{}", fmt_f64(e.time), fmt_f64(e.size));
    }
    out
}
