use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use trajlift::bases::{
    coefficient_magnitude_profile, dct_basis, load_basis, sample_trajectories, save_basis,
    svd_basis_from_trajectories, truncation_error_profile, ErrorMetric,
};
use trajlift::inference::{sliding_infer, window_starts, Lifter, SlidingConfig};
use trajlift::io::{
    load_pose_sequence, load_skeleton, normalize_2d, project_camera, save_pose_sequence,
    save_skeleton, CameraModel, PoseSequence, SynthConfig, SynthGenerator,
};
use trajlift::metrics::EvalReport;
use trajlift::motion::{root_align_rows, MotionMatrix, SkeletonConfig};
use trajlift::network::{
    evaluate_loss, init_network, load_checkpoint, save_checkpoint, train_with, NetworkConfig,
    Sample, TrainConfig,
};
use trajlift::Error;

use crate::config;
use crate::{
    AnalyzeArgs, BasesArgs, EvalArgs, Family, ImageArgs, InferArgs, Metric, SynthArgs, TrainArgs,
};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io { .. } => EXIT_IO,
            Error::Numeric(_) => EXIT_NUMERIC,
            Error::Dimension(_) | Error::Parameter(_) | Error::Parse { .. } => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::io(format!("no such file: {}", path.display())))
    }
}

fn require_dir(path: &Path) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::io(format!(
            "no such directory: {}",
            path.display()
        )))
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::io(format!("creating {}: {e}", path.display())))
}

fn seed_or(default: u64) -> CliResult<u64> {
    Ok(config::seed_override()
        .map_err(CliError::usage)?
        .unwrap_or(default))
}

/// `.pose` files in `dir`, sorted by name.
fn pose_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::io(format!("reading {}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::io(format!("reading {}: {e}", dir.display())))?
            .path();
        if path.is_file() && path.extension().is_some_and(|x| x == "pose") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Every 3D sequence in `dir`; 2D files are skipped. All must share `F`.
fn load_corpus(dir: &Path) -> CliResult<Vec<MotionMatrix>> {
    require_dir(dir)?;
    let mut motions = Vec::new();
    for path in pose_files(dir)? {
        let seq = load_pose_sequence(&path)?;
        if seq.dims() == 3 {
            motions.push(seq.to_motion_matrix()?);
        }
    }
    let first = motions
        .first()
        .ok_or_else(|| CliError::usage(format!("no 3D pose files in {}", dir.display())))?;
    let f = first.frames();
    if motions.iter().any(|m| m.frames() != f) {
        return Err(CliError::usage(format!(
            "corpus {} mixes sequence lengths; every sequence must have F={f}",
            dir.display()
        )));
    }
    Ok(motions)
}

pub fn bases(a: BasesArgs) -> CliResult<()> {
    if let Some(c) = &a.corpus {
        require_dir(c)?;
    }
    let corpus = a.corpus.as_deref().map(load_corpus).transpose()?;
    if let Some(m) = &corpus {
        if m[0].frames() != a.frames {
            return Err(CliError::usage(format!(
                "corpus has F={}, requested F={}",
                m[0].frames(),
                a.frames
            )));
        }
    }
    let basis = match a.family {
        Family::Dct => dct_basis(a.frames, a.num_bases)?,
        Family::Svd => {
            let motions = corpus
                .as_ref()
                .ok_or_else(|| CliError::usage("--family svd requires --corpus"))?;
            if a.num_bases > a.frames {
                return Err(CliError::usage(format!(
                    "K={} exceeds F={}",
                    a.num_bases, a.frames
                )));
            }
            let stacked = sample_trajectories(motions, a.samples, seed_or(a.seed)?)?;
            svd_basis_from_trajectories(stacked.view(), a.num_bases)?
        }
    };
    save_basis(&basis, &a.out)?;
    println!(
        "family={} F={} K={}",
        basis.family(),
        basis.frames(),
        basis.num_bases()
    );
    println!(
        "orthogonality_residual={:e}",
        basis.orthogonality_residual()
    );
    if let Some(m) = &corpus {
        let p =
            truncation_error_profile(m, &basis, [basis.num_bases()], ErrorMetric::RootMeanSquare)?;
        println!("reconstruction_error={:e}", p[0].error);
    }
    Ok(())
}

pub fn analyze(a: AnalyzeArgs) -> CliResult<()> {
    require_dir(&a.corpus)?;
    require_file(&a.basis)?;
    let basis = load_basis(&a.basis)?;
    let motions = load_corpus(&a.corpus)?;
    if motions[0].frames() != basis.frames() {
        return Err(CliError::usage(format!(
            "corpus has F={}, basis has F={}",
            motions[0].frames(),
            basis.frames()
        )));
    }
    if a.max_k == 0 || a.max_k > basis.num_bases() {
        return Err(CliError::usage(format!(
            "--max-k must be in [1, {}]",
            basis.num_bases()
        )));
    }
    let metric = match a.metric {
        Metric::Mean => ErrorMetric::MeanJointDistance,
        Metric::Rms => ErrorMetric::RootMeanSquare,
    };
    let coefs = coefficient_magnitude_profile(&motions, &basis.truncated(a.max_k)?)?;
    let trunc = truncation_error_profile(&motions, &basis, 1..=a.max_k, metric)?;

    create_dir(&a.out_dir)?;
    let mut c = String::from("k,mean_abs\n");
    for p in &coefs {
        writeln!(c, "{},{:?}", p.k, p.mean_abs).expect("String write");
    }
    let mut t = String::from("num_bases,error\n");
    for p in &trunc {
        writeln!(t, "{},{:?}", p.num_bases, p.error).expect("String write");
    }
    write_text(&a.out_dir.join("coefficients.csv"), &c)?;
    write_text(&a.out_dir.join("truncation.csv"), &t)?;
    println!("sequences={}\nmax_k={}", motions.len(), a.max_k);
    Ok(())
}

fn default_skeleton(joints: usize) -> CliResult<SkeletonConfig> {
    if joints == 17 {
        Ok(SkeletonConfig::h36m17())
    } else {
        Ok(SkeletonConfig::generic(joints)?)
    }
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    let cfg = SynthConfig {
        frames: a.frames,
        joints: a.joints,
        k_gen: a.k_gen,
        amplitude: a.amplitude,
        noise_sigma: a.noise,
        seed: seed_or(a.seed)?,
        latent_rank: a.latent_rank,
        rest_scale: a.rest_scale,
        depth_offset: a.depth_offset,
    };
    if a.count == 0 {
        return Err(CliError::usage("--count must be positive"));
    }
    let skeleton = default_skeleton(a.joints)?;
    let generator = SynthGenerator::new(cfg, Some(&skeleton))?;
    let camera = CameraModel::pinhole(
        a.focal,
        a.image.image_width / 2.0,
        a.image.image_height / 2.0,
    )?;

    create_dir(&a.out)?;
    save_skeleton(&skeleton, &a.out.join("skeleton.skel"))?;
    for i in 0..a.count {
        let motion = generator.sequence(i as u64)?;
        let pixels = project_camera(motion.view(), &camera)?;
        let stem = format!("seq_{i:04}");
        save_pose_sequence(
            &PoseSequence::new(motion.into_inner(), 3)?,
            &a.out.join(format!("{stem}.3d.pose")),
        )?;
        save_pose_sequence(
            &PoseSequence::new(pixels, 2)?,
            &a.out.join(format!("{stem}.2d.pose")),
        )?;
    }
    println!(
        "sequences={}\nframes={}\njoints={}",
        a.count, a.frames, a.joints
    );
    Ok(())
}

/// `(name, 2D, 3D)` for every `<name>.2d.pose` with a matching 3D file.
fn load_pairs(dir: &Path) -> CliResult<Vec<(String, PoseSequence, PoseSequence)>> {
    let mut pairs = Vec::new();
    for path in pose_files(dir)? {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let Some(stem) = name.strip_suffix(".2d.pose") else {
            continue;
        };
        let path3 = dir.join(format!("{stem}.3d.pose"));
        require_file(&path3)?;
        let (s2, s3) = (load_pose_sequence(&path)?, load_pose_sequence(&path3)?);
        if s2.dims() != 2 || s3.dims() != 3 {
            return Err(CliError::usage(format!(
                "{stem}: expected a 2D and a 3D file"
            )));
        }
        if s2.frames() != s3.frames() || s2.joints() != s3.joints() {
            return Err(CliError::usage(format!(
                "{stem}: 2D is {}x{} joints, 3D is {}x{} joints",
                s2.frames(),
                s2.joints(),
                s3.frames(),
                s3.joints()
            )));
        }
        pairs.push((stem.to_string(), s2, s3));
    }
    if pairs.is_empty() {
        return Err(CliError::usage(format!(
            "no <name>.2d.pose / <name>.3d.pose pairs in {}",
            dir.display()
        )));
    }
    Ok(pairs)
}

fn load_or_default_skeleton(path: Option<&Path>, joints: usize) -> CliResult<SkeletonConfig> {
    let skel = match path {
        Some(p) => load_skeleton(p)?,
        None => default_skeleton(joints)?,
    };
    if skel.num_joints() != joints {
        return Err(CliError::usage(format!(
            "skeleton has {} joints, data has {joints}",
            skel.num_joints()
        )));
    }
    Ok(skel)
}

fn normalized(seq: &PoseSequence, image: ImageArgs) -> CliResult<ndarray::Array2<f64>> {
    Ok(normalize_2d(
        seq.data().view(),
        image.image_width,
        image.image_height,
    )?)
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    require_dir(&a.data)?;
    for p in [&a.config, &a.basis, &a.skeleton].into_iter().flatten() {
        require_file(p)?;
    }
    let pairs = load_pairs(&a.data)?;
    let joints = pairs[0].1.joints();
    if pairs.iter().any(|(_, s, _)| s.joints() != joints) {
        return Err(CliError::usage("sequences disagree on the joint count"));
    }

    let mut net = NetworkConfig::new(a.frames, a.num_bases, joints);
    let mut tcfg = TrainConfig::default();
    if let Some(p) = &a.config {
        let text = fs::read_to_string(p)
            .map_err(|e| CliError::io(format!("reading {}: {e}", p.display())))?;
        config::apply(&text, &mut net, &mut tcfg)
            .map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
    }
    if let Some(s) = config::seed_override().map_err(CliError::usage)? {
        net.seed = s;
        tcfg.seed = s;
    }
    net.validate()?;
    tcfg.validate()?;

    let basis = match &a.basis {
        Some(p) => load_basis(p)?,
        None => dct_basis(a.frames, a.num_bases)?,
    };
    if basis.frames() != a.frames || basis.num_bases() != a.num_bases {
        return Err(CliError::usage(format!(
            "basis is F={} K={}, requested F={} K={}",
            basis.frames(),
            basis.num_bases(),
            a.frames,
            a.num_bases
        )));
    }
    let data_skel = a.data.join("skeleton.skel");
    let skel_path = a
        .skeleton
        .clone()
        .or_else(|| data_skel.is_file().then_some(data_skel));
    let skeleton = load_or_default_skeleton(skel_path.as_deref(), joints)?;

    let samples = windows(&pairs, a.frames, a.stride, a.image, skeleton.root_index)?;
    let params = init_network(&net)?;
    let (params, log) = train_with(params, &basis, &samples, &tcfg, Some(&skeleton), |r| {
        eprintln!("epoch {} lr={:e} loss={:.4}", r.epoch, r.lr, r.loss);
    })?;
    save_checkpoint(&params, &basis, &a.out)?;

    let mut csv = String::from("epoch,lr,loss\n");
    for r in &log {
        writeln!(csv, "{},{:?},{:?}", r.epoch, r.lr, r.loss).expect("String write");
    }
    let log_path = a.log.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".loss.csv");
        p.into()
    });
    write_text(&log_path, &csv)?;
    println!("windows={}\nepochs={}", samples.len(), log.len());
    println!("eval_loss={:?}", evaluate_loss(&params, &basis, &samples)?);
    Ok(())
}

/// Cuts every pair into `F`-frame windows with the given stride; the last
/// window always ends on the last frame.
fn windows(
    pairs: &[(String, PoseSequence, PoseSequence)],
    frames: usize,
    stride: usize,
    image: ImageArgs,
    root: usize,
) -> CliResult<Vec<Sample>> {
    let cfg = SlidingConfig {
        frames,
        step: stride,
        flip_average: false,
    };
    let mut out = Vec::new();
    for (name, s2, s3) in pairs {
        if s2.frames() < frames {
            return Err(CliError::usage(format!(
                "{name} has {} frames, fewer than F={frames}",
                s2.frames()
            )));
        }
        let input = normalized(s2, image)?;
        for s0 in window_starts(s2.frames(), &cfg)? {
            let rows = ndarray::s![s0..s0 + frames, ..];
            let target = root_align_rows(s3.data().slice(rows), root);
            out.push(Sample::new(input.slice(rows).to_owned(), target)?);
        }
    }
    Ok(out)
}

pub fn infer(a: InferArgs) -> CliResult<()> {
    require_file(&a.model)?;
    require_file(&a.video)?;
    if let Some(p) = &a.skeleton {
        require_file(p)?;
    }
    let (params, basis) = load_checkpoint(&a.model)?;
    let video = load_pose_sequence(&a.video)?;
    if video.dims() != 2 {
        return Err(CliError::usage("--video must be a 2D pose file"));
    }
    let joints = params.config.joints;
    if video.joints() != joints {
        return Err(CliError::usage(format!(
            "video has {} joints, model expects {joints}",
            video.joints()
        )));
    }
    let frames = params.config.frames;
    if video.frames() < frames {
        return Err(CliError::usage(format!(
            "video has {} frames, model needs at least F={frames}",
            video.frames()
        )));
    }
    let skeleton = load_or_default_skeleton(a.skeleton.as_deref(), joints)?;
    let cfg = SlidingConfig {
        frames,
        step: a.step,
        flip_average: !a.no_flip,
    };
    let input = normalized(&video, a.image)?;
    let lifter = Lifter::new(params, basis)?;
    let poses = sliding_infer(&lifter, input.view(), &cfg, Some(&skeleton))?;
    save_pose_sequence(&PoseSequence::new(poses, 3)?, &a.out)?;
    println!(
        "frames={}\nwindows={}\nflip={}",
        video.frames(),
        window_starts(video.frames(), &cfg)?.len(),
        cfg.flip_average
    );
    Ok(())
}

pub fn eval(a: EvalArgs) -> CliResult<()> {
    for p in [&a.pred, &a.gt, &a.skeleton] {
        require_file(p)?;
    }
    let pred = load_pose_sequence(&a.pred)?;
    let gt = load_pose_sequence(&a.gt)?;
    let skeleton = load_skeleton(&a.skeleton)?;
    if pred.dims() != 3 || gt.dims() != 3 {
        return Err(CliError::usage("--pred and --gt must be 3D pose files"));
    }
    if pred.data().dim() != gt.data().dim() {
        return Err(CliError::usage(format!(
            "prediction is {}x{} joints, ground truth is {}x{} joints",
            pred.frames(),
            pred.joints(),
            gt.frames(),
            gt.joints()
        )));
    }
    let report = EvalReport::compute(pred.data().view(), gt.data().view(), &skeleton)?;
    let csv_path = a.per_frame.unwrap_or_else(|| {
        let mut p = a.pred.clone().into_os_string();
        p.push(".frames.csv");
        p.into()
    });
    write_text(&csv_path, &report.per_frame_csv())?;
    print!("{}", report.to_key_value());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes_by_kind() {
        let io = Error::Io {
            path: "x".into(),
            source: std::io::Error::other("boom"),
        };
        assert_eq!(CliError::from(io).code, EXIT_IO);
        assert_eq!(
            CliError::from(Error::Numeric("nan".into())).code,
            EXIT_NUMERIC
        );
        assert_eq!(
            CliError::from(Error::Parameter("k".into())).code,
            EXIT_USAGE
        );
        assert_eq!(
            CliError::from(Error::Dimension("d".into())).code,
            EXIT_USAGE
        );
    }
}
