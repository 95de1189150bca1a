use std::io::Write;
use std::path::Path;

use bilevel_fbf::dynamics::TrajectoryTrace;
use bilevel_fbf::fbf::IterationTrace;

/// Write-then-rename so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// `f64` formatting used in every CSV: Rust's shortest round-trip `Display`,
/// which is byte-stable across runs.
fn fmt(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

pub fn solve_trace_csv(trace: &IterationTrace, dim: usize) -> String {
    let mut out = String::from("n");
    for i in 0..dim {
        out.push_str(&format!(",x{i}"));
    }
    for i in 0..dim {
        out.push_str(&format!(",y{i}"));
    }
    out.push_str(",lambda,beta,res_fix,res_gap,dist_ref,estimate_slack\n");
    for r in &trace.records {
        out.push_str(&r.n.to_string());
        for i in 0..dim {
            out.push(',');
            out.push_str(&fmt(r.x[i]));
        }
        for i in 0..dim {
            out.push(',');
            out.push_str(&fmt(r.y[i]));
        }
        out.push_str(&format!(
            ",{},{},{},{},{},{}\n",
            fmt(r.lambda),
            fmt(r.beta),
            fmt(r.res_fix),
            fmt(r.res_gap),
            fmt_opt(r.dist_ref),
            fmt_opt(r.estimate_slack),
        ));
    }
    out
}

pub fn solve_trace_json(trace: &IterationTrace) -> serde_json::Value {
    serde_json::Value::Array(
        trace
            .records
            .iter()
            .map(|r| {
                serde_json::json!({
                    "n": r.n,
                    "x": r.x.as_slice(),
                    "y": r.y.as_slice(),
                    "lambda": r.lambda,
                    "beta": r.beta,
                    "res_fix": r.res_fix,
                    "res_gap": r.res_gap,
                    "dist_ref": r.dist_ref,
                    "estimate_slack": r.estimate_slack,
                })
            })
            .collect(),
    )
}

pub fn dynamics_trace_csv(trace: &TrajectoryTrace, dim: usize) -> String {
    let mut out = String::from("t");
    for i in 0..dim {
        out.push_str(&format!(",x{i}"));
    }
    for i in 0..dim {
        out.push_str(&format!(",y{i}"));
    }
    out.push_str(",norm_h,dist_ref\n");
    for r in &trace.records {
        out.push_str(&fmt(r.t));
        for i in 0..dim {
            out.push(',');
            out.push_str(&fmt(r.x[i]));
        }
        for i in 0..dim {
            out.push(',');
            out.push_str(&fmt(r.y[i]));
        }
        out.push_str(&format!(",{},{}\n", fmt(r.norm_h), fmt_opt(r.dist_ref)));
    }
    out
}

pub fn dynamics_trace_json(trace: &TrajectoryTrace) -> serde_json::Value {
    serde_json::Value::Array(
        trace
            .records
            .iter()
            .map(|r| {
                serde_json::json!({
                    "t": r.t,
                    "x": r.x.as_slice(),
                    "y": r.y.as_slice(),
                    "norm_h": r.norm_h,
                    "dist_ref": r.dist_ref,
                })
            })
            .collect(),
    )
}

pub fn to_pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serialization");
    s.push('\n');
    s
}
