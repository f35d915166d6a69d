//! Command implementations.

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use tcwave::cascade::{self, CascadeMode, CascadeSpec, LevelPlan};
use tcwave::engine::{self, ChannelBank, KernelSamples};
use tcwave::oracle::{self, SeriesKernel};
use tcwave::select::{self, ModelKind, SweepConfig};
use tcwave::signal::{self, SignalBuffer};
use tcwave::wavelet::{self, Scalogram};

use crate::config::{
    AnalyzeArgs, CascadeArgs, Cli, CliError, CliResult, Command, InputSpec, KernelArgs,
    NormalizationMode, NormsArgs, ScaleselArgs, SignalArgs, StreamArgs,
};
use crate::output;

pub fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Kernel(args) => kernel(args),
        Command::Norms(args) => norms(args),
        Command::Scalesel(args) => scalesel(args),
        Command::Stream(args) => stream(args),
    }
}

/// Internal ladder plus the range of output columns, per the cascade flags.
fn plan_from_args(args: &CascadeArgs) -> CliResult<LevelPlan> {
    let levels = match (args.levels, args.sigma_max) {
        (Some(k), _) => {
            if k < 1 {
                return Err(CliError::Config("--levels must be at least 1".into()));
            }
            k
        }
        (None, Some(sigma_max)) => {
            if !(sigma_max > 0.0) {
                return Err(CliError::Config("--sigma-max must be > 0".into()));
            }
            let finest = args.tau0 * args.c * args.c;
            let target = sigma_max * sigma_max;
            if target < finest {
                return Err(CliError::Config(format!(
                    "--sigma-max {sigma_max} lies below the finest output scale sigma={}",
                    finest.sqrt()
                )));
            }
            1 + (((target / finest).ln() / (2.0 * args.c.ln())) - 1e-9).ceil().max(0.0) as usize
        }
        (None, None) => 8,
    };
    let tau_finest = args.tau0 * args.c * args.c;
    let tau_coarsest = tau_finest * (args.c * args.c).powi(levels as i32 - 1);
    Ok(LevelPlan::new(
        args.c,
        tau_finest,
        tau_coarsest,
        args.dt,
        CascadeMode::Discrete,
        LevelPlan::DEFAULT_MIN_DEPTH,
    )?)
}

fn load_signal(args: &SignalArgs, plan: &LevelPlan) -> CliResult<SignalBuffer> {
    let spec = InputSpec::parse(&args.input)?;
    let dt = plan.spec.dt;
    let tau_top = *plan.output_scales().last().unwrap();
    let horizon = cascade::mean_delay_continuous(plan.spec.c, tau_top)? / dt;
    let mut buf = match &spec {
        InputSpec::Csv { path, column } => {
            signal::read_csv(path, column.as_deref(), dt)?
        }
        InputSpec::Wav { path } => signal::read_wav(path)?,
        InputSpec::Blob { sigma } | InputSpec::Edge { sigma } => {
            let reach = (8.0 * sigma).ceil() as usize;
            let center = (2.0 * horizon).ceil() as usize + reach + 16;
            let len = args
                .length
                .unwrap_or(center + reach + (4.0 * horizon).ceil() as usize + 64);
            match spec {
                InputSpec::Blob { .. } => signal::gen_blob(*sigma, len, center)?,
                _ => signal::gen_edge(*sigma, len, center)?,
            }
        }
        InputSpec::Chirp { a, b } => {
            let len = args.length.unwrap_or_else(|| (b.abs().max(1.0) as usize) + 1);
            signal::gen_chirp(*a, *b, len)?
        }
        InputSpec::Impulse { position } => {
            let len = args
                .length
                .unwrap_or((6.0 * horizon).ceil() as usize + position + 64);
            signal::gen_impulse(len, *position, 1.0)?
        }
        InputSpec::Step { position } => {
            let len = args
                .length
                .unwrap_or((6.0 * horizon).ceil() as usize + position + 64);
            signal::gen_step(len, *position)?
        }
    };
    let demean_default = spec.is_file();
    let demean = if args.demean {
        true
    } else if args.no_demean {
        false
    } else {
        demean_default
    };
    if demean {
        buf.demean();
    }
    Ok(buf)
}

/// Per-scale equivalent derivative kernels at the output levels.
fn output_kernels(plan: &LevelPlan, order: u8, gamma: f64) -> CliResult<Vec<KernelSamples>> {
    let spec = &plan.spec;
    let len = engine::suggested_kernel_len(spec, spec.levels);
    let mut kernels = Vec::with_capacity(plan.output_count());
    for layer in (plan.output_offset + 1)..=spec.levels {
        let base = engine::equivalent_kernel(spec, layer, len)?;
        let mut k = wavelet::differentiate_kernel(&base, order);
        if order > 0 {
            let factor = k.meta.tau.powf(order as f64 * gamma / 2.0);
            for v in &mut k.values {
                *v *= factor;
            }
            k.meta.gamma = gamma;
        }
        kernels.push(k);
    }
    Ok(kernels)
}

/// Norms used by the lp / mother normalization modes, one per output scale.
fn normalization_norms(
    plan: &LevelPlan,
    order: u8,
    gamma: f64,
    mode: NormalizationMode,
) -> CliResult<Option<(f64, Vec<f64>)>> {
    match mode {
        NormalizationMode::Gamma => Ok(None),
        NormalizationMode::LpDiscrete(p) => {
            let spec = &plan.spec;
            let len = engine::suggested_kernel_len(spec, spec.levels);
            let mut norms = Vec::with_capacity(plan.output_count());
            for layer in (plan.output_offset + 1)..=spec.levels {
                let base = engine::equivalent_kernel(spec, layer, len)?;
                let k = wavelet::differentiate_kernel(&base, order);
                norms.push(wavelet::scale_normalized_lp_norm(&k, gamma, p));
            }
            Ok(Some((p, norms)))
        }
        NormalizationMode::Mother => {
            let p = wavelet::gamma_to_p(order, gamma)?;
            let mut norms = Vec::with_capacity(plan.output_count());
            for tau in plan.output_scales() {
                let kernel =
                    SeriesKernel::limit_truncation(plan.spec.c, *tau, oracle::REFERENCE_LAYERS, order)?;
                norms.push(oracle::continuous_lp_norm(&kernel, p, gamma)?);
            }
            Ok(Some((p, norms)))
        }
    }
}

fn derivative_scalogram(
    output: &Scalogram,
    plan: &LevelPlan,
    order: u8,
    gamma: f64,
    mode: NormalizationMode,
) -> CliResult<Scalogram> {
    let derived = wavelet::temporal_derivative(output, order)?;
    let normalized = wavelet::scale_normalize(&derived, gamma)?;
    match normalization_norms(plan, order, gamma, mode)? {
        None => Ok(normalized),
        Some((p, norms)) => Ok(wavelet::mother_wavelet_normalize(&normalized, p, &norms)?),
    }
}

fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    if args.norm.order > 2 {
        return Err(CliError::Config("--order must be 0, 1 or 2".into()));
    }
    let mode = NormalizationMode::parse(&args.norm.normalization)?;
    let plan = plan_from_args(&args.cascade)?;
    let buf = load_signal(&args.signal, &plan)?;
    let mut bank = ChannelBank::new(plan.spec.clone());
    let smoothed = bank.run(&buf.samples)?;
    let output_view = smoothed.select_columns(plan.output_offset, plan.spec.levels);
    output::write_scalogram(
        &output::derived_path(&args.out, "smooth"),
        &output_view,
        &buf.label,
    )?;

    if args.norm.order >= 1 {
        let d1 = derivative_scalogram(&output_view, &plan, 1, args.norm.gamma, mode)?;
        output::write_scalogram(&output::derived_path(&args.out, "d1"), &d1, &buf.label)?;
        if args.norm.order >= 2 {
            let d2 = derivative_scalogram(&output_view, &plan, 2, args.norm.gamma, mode)?;
            output::write_scalogram(&output::derived_path(&args.out, "d2"), &d2, &buf.label)?;
            // the quadrature measure combines the gamma-normalized responses
            let g1 = derivative_scalogram(
                &output_view,
                &plan,
                1,
                args.norm.gamma,
                NormalizationMode::Gamma,
            )?;
            let g2 = derivative_scalogram(
                &output_view,
                &plan,
                2,
                args.norm.gamma,
                NormalizationMode::Gamma,
            )?;
            let quad = wavelet::quasi_quadrature(&g1, &g2, args.norm.quad_c)?;
            output::write_scalogram(&output::derived_path(&args.out, "quad"), &quad, &buf.label)?;
        }
    }

    if args.dump_kernels {
        dump_kernels(&plan, args.norm.gamma, &args.out)?;
    }
    Ok(())
}

fn dump_kernels(plan: &LevelPlan, gamma: f64, out: &Path) -> CliResult<()> {
    for order in 0..=2u8 {
        let kernels = output_kernels(plan, order, gamma)?;
        output::write_kernels(
            &output::derived_path(out, &format!("kernel_n{order}")),
            &kernels,
            &format!("equivalent kernels, order {order}"),
        )?;
    }
    Ok(())
}

fn kernel(args: KernelArgs) -> CliResult<()> {
    let plan = plan_from_args(&args.cascade)?;
    dump_kernels(&plan, args.gamma, &args.out)
}

fn norms(args: NormsArgs) -> CliResult<()> {
    let plan = plan_from_args(&args.cascade)?;
    let spec = &plan.spec;
    let len = engine::suggested_kernel_len(spec, spec.levels);
    let file = File::create(&args.out)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "sigma,n,gamma,p,continuous,discrete")?;
    for order in 1..=2u8 {
        let p = wavelet::gamma_to_p(order, args.gamma)?;
        for (idx, layer) in ((plan.output_offset + 1)..=spec.levels).enumerate() {
            let tau = plan.output_scales()[idx];
            let series = SeriesKernel::limit_truncation(spec.c, tau, oracle::REFERENCE_LAYERS, order)?;
            let continuous = oracle::continuous_lp_norm(&series, p, args.gamma)?;
            let base = engine::equivalent_kernel(spec, layer, len)?;
            let discrete_kernel = wavelet::differentiate_kernel(&base, order);
            let discrete = wavelet::scale_normalized_lp_norm(&discrete_kernel, args.gamma, p);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                output::fmt(tau.sqrt()),
                order,
                output::fmt(args.gamma),
                output::fmt(p),
                output::fmt(continuous),
                output::fmt(discrete),
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn scalesel(args: ScaleselArgs) -> CliResult<()> {
    let model = match args.model.as_str() {
        "blob" => ModelKind::Blob,
        _ => ModelKind::Edge,
    };
    let config = SweepConfig {
        c: args.c,
        sigma_min: args.sigma_min,
        sigma_max: args.sigma_max,
        order: args.order,
        gamma: args.gamma,
    };
    let rows = select::scale_selection_sweep(model, &args.sigma_refs, &config)?;
    let file = File::create(&args.out)?;
    let mut w = BufWriter::new(file);
    select::write_sweep_csv(&rows, args.c, &mut w)?;
    w.flush()?;
    Ok(())
}

fn stream_header(spec: &CascadeSpec, offset: usize, order: u8) -> String {
    let k_out = spec.levels - offset;
    let mut header = String::from("t");
    for k in 1..=k_out {
        header.push_str(&format!(",scale_{k}"));
    }
    if order >= 1 {
        for k in 1..=k_out {
            header.push_str(&format!(",d1_scale_{k}"));
        }
    }
    if order >= 2 {
        for k in 1..=k_out {
            header.push_str(&format!(",d2_scale_{k}"));
        }
    }
    header
}

fn stream(args: StreamArgs) -> CliResult<()> {
    if args.order > 2 {
        return Err(CliError::Config("--order must be 0, 1 or 2".into()));
    }
    let plan = plan_from_args(&args.cascade)?;
    let spec = plan.spec.clone();
    let offset = plan.output_offset;
    let scales = plan.output_scales().to_vec();

    let mut bank = match &args.state_file {
        Some(path) if path.exists() => {
            let file = File::open(path).map_err(tcwave::Error::from)?;
            ChannelBank::restore_state(spec.clone(), file)?
        }
        _ => ChannelBank::new(spec.clone()),
    };

    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    writeln!(out, "{}", stream_header(&spec, offset, args.order))?;
    out.flush()?;

    let d1_factors: Vec<f64> = scales
        .iter()
        .map(|tau| tau.powf(args.gamma / 2.0))
        .collect();
    let d2_factors: Vec<f64> = scales.iter().map(|tau| tau.powf(args.gamma)).collect();

    for (line_no, line) in stdin.lock().lines().enumerate() {
        let line = line.map_err(tcwave::Error::from)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let sample: f64 = match trimmed.parse() {
            Ok(v) => v,
            Err(_) => {
                eprintln!(
                    "warning: line {}: cannot parse `{trimmed}` as a number; sample skipped",
                    line_no + 1
                );
                continue;
            }
        };
        let t = bank.frame_index() as f64 * spec.dt;
        match bank.step(sample) {
            Ok(_) => {}
            Err(e) => {
                eprintln!("warning: line {}: {e}; sample skipped", line_no + 1);
                continue;
            }
        }
        let mut row = output::fmt(t);
        for v in &bank.levels()[offset..] {
            row.push(',');
            row.push_str(&output::fmt(*v));
        }
        if args.order >= 1 {
            let d1 = bank.delta_t();
            for (v, f) in d1[offset..].iter().zip(&d1_factors) {
                row.push(',');
                row.push_str(&output::fmt(v * f));
            }
        }
        if args.order >= 2 {
            let d2 = bank.delta_tt();
            for (v, f) in d2[offset..].iter().zip(&d2_factors) {
                row.push(',');
                row.push_str(&output::fmt(v * f));
            }
        }
        writeln!(out, "{row}")?;
        out.flush()?;
    }

    if let Some(path) = &args.state_file {
        let file = File::create(path).map_err(tcwave::Error::from)?;
        let mut w = BufWriter::new(file);
        bank.save_state(&mut w).map_err(tcwave::Error::from)?;
        w.flush()?;
    }
    Ok(())
}
