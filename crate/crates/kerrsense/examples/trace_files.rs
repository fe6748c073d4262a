//! Trace-file round trip: write a synthetic ensemble in the trace CSV
//! schema, ingest it back, and run the moment estimator on the file —
//! the same path a real digitizer record would take.
//!
//! Run: cargo run --release -p kerrsense --example trace_files

use kerrsense::measurement::{
    estimate_moments, export_traces, ingest_traces, output_moments, synthesize_traces,
    MeasurementModel, TraceSeed,
};
use kerrsense::units::khz;
use kerrsense::{liouvillian, observables, steady_state, FockSpace, PhysicalParams};

fn main() -> kerrsense::Result<()> {
    let params = PhysicalParams::overcoupled(khz(-200.0), khz(300.0), khz(-9.14), khz(72.0))?;
    let liou = liouvillian(&params, FockSpace::new(96)?);
    eprintln!("solving the steady state ...");
    let obs = observables(&steady_state(&liou)?);

    let model = MeasurementModel::steady_defaults(params.kappa_ext(), 0.5)?;
    let pm = output_moments(&obs, 1.0, &model)?;
    let te = synthesize_traces(&pm, &model, 200, 42)?;

    let dir = std::env::temp_dir();
    let path = dir.join("kerrsense_demo_traces.csv");
    export_traces(&te, &path)?;
    let bytes = std::fs::metadata(&path)?.len();
    println!("wrote {} traces x {} bins to {} ({bytes} bytes)", te.traces(), te.bins(), path.display());

    let head: String = std::fs::read_to_string(&path)?
        .lines()
        .next()
        .unwrap_or_default()
        .to_string();
    println!("header: {head}");

    let back = ingest_traces(&path, &model)?;
    assert_eq!(back.seed(), TraceSeed::Ingested);
    println!("\ningested back: {} traces x {} bins", back.traces(), back.bins());

    let moments = estimate_moments(&back)?;
    println!("\nper-bin moments from the file (first 5 bins):");
    println!("{:>5} {:>12} {:>12}", "bin", "<N>", "Var N");
    for (j, m) in moments.iter().take(5).enumerate() {
        println!("{j:>5} {:>12.4} {:>12.4}", m.n_out_mean, m.n_out_var);
    }
    println!("\ntargets from the model: <N> = {:.4}, Var N = {:.4}", pm.n_out_mean, pm.n_out_var);
    println!("(200 traces keep the scatter visible; the estimators converge as 1/sqrt(M))");

    std::fs::remove_file(&path)?;
    Ok(())
}
