use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::{info, warn};
use pae_core::analysis::{
    group_heatmap, make_fixture_by_name, pca2d, similarity_matrix, trajectory_similarity, Reference,
};
use pae_core::optimizer::seeded_latent;
use pae_core::{
    alpha_sweep, build_gs, build_pca, build_raw, build_sample_set, compute_pae, load_bundle,
    load_config, load_space, make_generator, optimize, save_bundle, save_space, triples_from_tags,
    AugKind, AugmentationKind, CorpusSubspace, DescentSettings, Embedding, EmbeddingBundle,
    EmbeddingKind, GeneratorKind, LossSpec, PaeConfig, PaeConfigFile, PaeTemplate, Space, Triple,
};

use crate::args::{
    AnalyzeCmd, Aug, Command, FixturesCmd, GeneratorArg, Init, InlineConfig, Method, OptimizeArgs,
    PaeCmd, SubspaceCmd, Target,
};
use crate::{CliError, WithSource};

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Fixtures(FixturesCmd::Make { recipe, seed, out }) => {
            let bundle = make_fixture_by_name(&recipe, seed)?;
            save_bundle(&bundle, &out)?;
            println!(
                "wrote {} items ({recipe}, seed {seed}) to {}",
                bundle.items.len(),
                out.display()
            );
            Ok(())
        }
        Command::Subspace(SubspaceCmd::Build {
            bundle,
            method,
            tags,
            ids,
            components,
            out,
        }) => subspace_build(&bundle, method, &tags, &ids, components, &out),
        Command::Pae(PaeCmd::Compute {
            bundle,
            image,
            text,
            config,
            save_config,
            out,
        }) => pae_compute(
            &bundle,
            &image,
            &text,
            &config,
            save_config.as_deref(),
            &out,
        ),
        Command::Pae(PaeCmd::Sweep {
            bundle,
            subspaces,
            aug,
            alphas,
            triples,
            no_normalize,
            out,
        }) => pae_sweep(
            &bundle,
            &subspaces,
            &aug,
            &alphas,
            triples.as_deref(),
            no_normalize,
            &out,
        ),
        Command::Optimize(args) => optimize_cmd(&args),
        Command::Analyze(cmd) => analyze(cmd),
    }
}

fn aug_kind(a: Aug) -> AugmentationKind {
    match a {
        Aug::Simple => AugmentationKind::Simple,
        Aug::Plus => AugmentationKind::Plus,
        Aug::Ex => AugmentationKind::Exchange,
        Aug::Exd => AugmentationKind::ExchangeDistinct,
    }
}

fn open_bundle(path: &Path) -> Result<EmbeddingBundle> {
    load_bundle(path).source(path)
}

fn open_subspace(path: &Path) -> Result<CorpusSubspace> {
    match load_space(path).source(path)? {
        Space::Subspace(s) => Ok(s),
        Space::Manifold(_) => Err(CliError::Core {
            error: pae_core::Error::IncompatibleConfig(
                "a sample set (method all) has no linear projection; pass a gs, raw or pca subspace".into(),
            ),
            source: Some(path.to_path_buf()),
        }),
    }
}

fn item<'a>(bundle: &'a EmbeddingBundle, id: &str, path: &Path) -> Result<&'a Embedding> {
    bundle.get(id).source(path)
}

fn subspace_build(
    bundle_path: &Path,
    method: Method,
    tags: &[String],
    ids: &[String],
    components: Option<usize>,
    out: &Path,
) -> Result<()> {
    match (method, components) {
        (Method::Pca, None) => {
            return Err(CliError::Usage("--method pca requires --components".into()))
        }
        (Method::Pca, Some(_)) | (_, None) => {}
        (_, Some(_)) => {
            return Err(CliError::Usage(
                "--components only applies to --method pca".into(),
            ))
        }
    }
    let bundle = open_bundle(bundle_path)?;
    let selected: Vec<Embedding> = if ids.is_empty() {
        bundle
            .items
            .iter()
            .filter(|e| tags.iter().all(|t| e.has_tag(t)))
            .cloned()
            .collect()
    } else {
        ids.iter()
            .map(|id| item(&bundle, id, bundle_path).cloned())
            .collect::<Result<_>>()?
    };
    info!("building {method:?} space from {} items", selected.len());
    let space: Space = match method {
        Method::Gs => build_gs(&selected).source(bundle_path)?.into(),
        Method::Raw => build_raw(&selected).source(bundle_path)?.into(),
        Method::Pca => build_pca(&selected, components.unwrap_or_default())
            .source(bundle_path)?
            .into(),
        Method::All => build_sample_set(&selected).source(bundle_path)?.into(),
    };
    save_space(&space, out)?;
    let size = match &space {
        Space::Subspace(s) => s.len(),
        Space::Manifold(m) => m.len(),
    };
    println!(
        "wrote {} space with {size} vectors to {}",
        space.kind(),
        out.display()
    );
    Ok(())
}

fn resolve_config(c: &InlineConfig) -> Result<(PaeConfig, Option<PaeConfigFile>)> {
    if let Some(path) = &c.config {
        let cfg = load_config(path).source(path)?;
        let normalize = cfg.normalize_inputs() && !c.no_normalize;
        return Ok((cfg.with_normalize_inputs(normalize), None));
    }
    let (Some(subspace), Some(aug), Some(alpha)) = (&c.subspace, c.aug, c.alpha) else {
        return Err(CliError::Usage(
            "pass either --config or all of --subspace, --aug and --alpha".into(),
        ));
    };
    let space = load_space(subspace).source(subspace)?;
    let augmentation = AugKind::new(aug_kind(aug), alpha)?;
    let projection = space.kind();
    let cfg = PaeConfig::new(space, augmentation)
        .source(subspace)?
        .with_normalize_inputs(!c.no_normalize);
    let file = PaeConfigFile {
        projection,
        space: subspace.clone(),
        augmentation,
        normalize_inputs: !c.no_normalize,
    };
    Ok((cfg, Some(file)))
}

fn pae_compute(
    bundle_path: &Path,
    image: &str,
    text: &str,
    config: &InlineConfig,
    save_config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let (cfg, file) = resolve_config(config)?;
    let bundle = open_bundle(bundle_path)?;
    let e_i = item(&bundle, image, bundle_path)?;
    let e_t = item(&bundle, text, bundle_path)?;
    let pae = compute_pae(&cfg, e_i, e_t).source(bundle_path)?;
    let alpha = cfg.augmentation().alpha;
    let result = Embedding::new(
        format!("pae_{image}_{text}"),
        EmbeddingKind::Image,
        format!("PAE({image}, {text})"),
        pae,
    )
    .with_tags([
        "role:pae".to_string(),
        format!("source:{image}"),
        format!("prompt:{text}"),
        format!("config:{}", cfg.id()),
        format!("alpha:{alpha}"),
    ]);
    save_bundle(&EmbeddingBundle::new(bundle.dim, vec![result])?, out)?;
    if let Some(path) = save_config {
        let mut file = file.ok_or_else(|| {
            CliError::Usage("--save-config needs an inline configuration, not --config".into())
        })?;
        file.space = path_from_config(&file.space, path);
        file.save(path)?;
    }
    println!(
        "wrote {} PAE (alpha {alpha}) to {}",
        cfg.id(),
        out.display()
    );
    Ok(())
}

/// `target` as the config file at `config` should reference it: relative to
/// the config's directory when it lies below it, absolute otherwise.
fn path_from_config(target: &Path, config: &Path) -> PathBuf {
    let Ok(target_abs) = std::fs::canonicalize(target) else {
        return target.to_path_buf();
    };
    let dir = match config.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    match std::fs::canonicalize(dir) {
        Ok(dir_abs) => target_abs
            .strip_prefix(&dir_abs)
            .map(Path::to_path_buf)
            .unwrap_or(target_abs),
        Err(_) => target_abs,
    }
}

/// Triples listed by id in a CSV with header `image,text,target`.
fn read_triples_csv(
    path: &Path,
    bundle: &EmbeddingBundle,
    bundle_path: &Path,
) -> Result<Vec<Triple>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Core {
        error: pae_core::Error::Io {
            path: path.to_path_buf(),
            source: e,
        },
        source: None,
    })?;
    let schema = |message: String| CliError::Core {
        error: pae_core::Error::Schema {
            path: path.to_path_buf(),
            message,
        },
        source: None,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines
        .next()
        .map(|h| h.split(',').map(str::trim).collect::<Vec<_>>())
    {
        Some(h) if h == ["image", "text", "target"] => {}
        _ => return Err(schema("expected header 'image,text,target'".into())),
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let [i, t, g] = cols[..] else {
                return Err(schema(format!(
                    "row {} has {} columns, expected 3",
                    n + 2,
                    cols.len()
                )));
            };
            Ok(Triple {
                image: item(bundle, i, bundle_path)?.clone(),
                text: item(bundle, t, bundle_path)?.clone(),
                target: item(bundle, g, bundle_path)?.clone(),
            })
        })
        .collect()
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn pae_sweep(
    bundle_path: &Path,
    subspaces: &[PathBuf],
    augs: &[Aug],
    alphas: &[f64],
    triples_path: Option<&Path>,
    no_normalize: bool,
    out: &Path,
) -> Result<()> {
    let bundle = open_bundle(bundle_path)?;
    let triples = match triples_path {
        Some(p) => read_triples_csv(p, &bundle, bundle_path)?,
        None => triples_from_tags(&bundle).source(bundle_path)?,
    };
    let spaces: Vec<(PathBuf, Arc<Space>)> = subspaces
        .iter()
        .map(|p| Ok((p.clone(), Arc::new(load_space(p).source(p)?))))
        .collect::<Result<_>>()?;
    let mut kinds: Vec<_> = spaces.iter().map(|(_, s)| s.kind()).collect();
    kinds.sort_by_key(|k| k.as_str());
    kinds.dedup();
    let prefix_with_file = kinds.len() < spaces.len();

    let mut templates = Vec::new();
    for (path, space) in &spaces {
        for &aug in augs {
            let kind = aug_kind(aug);
            let base = format!("{}+{}", space.kind(), kind);
            let id = if prefix_with_file {
                format!("{}/{base}", file_stem(path))
            } else {
                base
            };
            match PaeTemplate::new(id.clone(), space.clone(), kind) {
                Ok(mut t) => {
                    t.normalize_inputs = !no_normalize;
                    templates.push(t);
                }
                Err(pae_core::Error::IncompatibleConfig(why)) => info!("skipping {id}: {why}"),
                Err(e) => return Err(e).source(path),
            }
        }
    }
    if templates.is_empty() {
        return Err(pae_core::Error::IncompatibleConfig(
            "no subspace/augmentation pair is compatible".into(),
        )
        .into());
    }
    let table = alpha_sweep(&templates, alphas, &triples).source(bundle_path)?;
    table.write_csv(out)?;
    for s in &table.skipped {
        warn!(
            "{} alpha {}: triple {} skipped: {}",
            s.config_id, s.alpha, s.triple_index, s.error
        );
    }
    println!(
        "wrote {} rows over {} triples to {}",
        table.rows.len(),
        triples.len(),
        out.display()
    );
    if !table.skipped.is_empty() {
        println!(
            "{} (config, alpha, triple) evaluations skipped",
            table.skipped.len()
        );
    }
    for id in table.config_ids() {
        let ranges = table.passing_ranges(id);
        if ranges.is_empty() {
            println!("{id}: no alpha passes both criteria");
        } else {
            let shown: Vec<String> = ranges
                .iter()
                .map(|(lo, hi)| format!("[{lo}, {hi}]"))
                .collect();
            println!("{id}: both criteria hold for alpha in {}", shown.join(", "));
        }
    }
    Ok(())
}

fn optimize_cmd(a: &OptimizeArgs) -> Result<()> {
    let bundle = open_bundle(&a.bundle)?;
    let dim = bundle.dim;
    let latent_dim = a.latent_dim.unwrap_or(dim);
    let kind = match a.generator {
        GeneratorArg::Linear => GeneratorKind::Linear,
        GeneratorArg::Mlp1 => GeneratorKind::Mlp1,
    };
    match (kind, a.hidden) {
        (GeneratorKind::Mlp1, None) => {
            return Err(CliError::Usage("--generator mlp1 requires --hidden".into()))
        }
        (GeneratorKind::Linear, Some(_)) => {
            return Err(CliError::Usage(
                "--hidden only applies to --generator mlp1".into(),
            ))
        }
        _ => {}
    }
    let g = make_generator(kind, a.seed, latent_dim, dim, a.hidden)?;
    let e_i = item(&bundle, &a.image, &a.bundle)?;
    let e_t = item(&bundle, &a.text, &a.bundle)?;

    // The edit origin is always the bundle image; `--init` only picks where
    // descent starts.
    let origin = pae_core::normalize(&e_i.vector).source(&a.bundle)?;
    let init = a.init.unwrap_or(match kind {
        GeneratorKind::Linear => Init::Invert,
        GeneratorKind::Mlp1 => Init::Random,
    });
    let z0 = match init {
        Init::Invert if kind == GeneratorKind::Mlp1 => {
            return Err(CliError::Usage(
                "--init invert needs --generator linear".into(),
            ))
        }
        Init::Invert => g.invert(&origin).ok_or(pae_core::Error::RankDeficient {
            rank: 0,
            requested: latent_dim,
        })?,
        Init::Random => seeded_latent(a.seed, latent_dim),
    };
    let origin_item = Embedding::new(
        e_i.id.clone(),
        EmbeddingKind::Image,
        e_i.label.clone(),
        origin.clone(),
    );

    let need = |flag: &str, ok: bool| {
        if ok {
            Ok(())
        } else {
            Err(CliError::Usage(
                format!("--target {:?} requires {flag}", a.target).to_lowercase(),
            ))
        }
    };
    let spec = match a.target {
        Target::Naive => LossSpec::naive_text(e_t.vector.clone()),
        Target::Pae => {
            need(
                "--subspace, --aug and --alpha",
                a.subspace.is_some() && a.aug.is_some() && a.alpha.is_some(),
            )?;
            let path = a.subspace.as_ref().expect("checked above");
            let space = load_space(path).source(path)?;
            let aug = AugKind::new(aug_kind(a.aug.expect("checked")), a.alpha.expect("checked"))?;
            let cfg = PaeConfig::new(space, aug).source(path)?;
            LossSpec::pae(compute_pae(&cfg, &origin_item, e_t).source(&a.bundle)?)
        }
        Target::Dpe => {
            need("--subspace", a.subspace.is_some())?;
            let path = a.subspace.as_ref().expect("checked above");
            LossSpec::dpe(open_subspace(path)?, &e_t.vector).source(path)?
        }
        Target::Directional => {
            need("--neutral", a.neutral.is_some())?;
            let neutral = item(&bundle, a.neutral.as_deref().expect("checked"), &a.bundle)?;
            LossSpec::directional(origin.clone(), e_t.vector.clone(), neutral.vector.clone())
        }
    };
    let settings = DescentSettings {
        lr: a.lr,
        max_steps: a.steps,
        tol: a.tol,
        record_latents: false,
    };
    let trace = optimize(&spec, &g, &z0, settings).source(&a.bundle)?;
    trace.write_csv(&a.out)?;
    if let Some(json) = &a.json {
        trace.write_json(json)?;
    }
    println!(
        "{} steps, loss {} -> {}, converged: {}",
        trace.steps.len(),
        trace.initial_loss(),
        trace.final_loss(),
        trace.converged
    );
    Ok(())
}

fn analyze(cmd: AnalyzeCmd) -> Result<()> {
    match cmd {
        AnalyzeCmd::Matrix {
            bundle,
            group_by,
            out,
        } => {
            let b = open_bundle(&bundle)?;
            let m = similarity_matrix(&b, &group_by).source(&bundle)?;
            m.write_csv(&out)?;
            println!(
                "wrote {}x{} group matrix to {}",
                m.row_groups.len(),
                m.col_groups.len(),
                out.display()
            );
        }
        AnalyzeCmd::Pca2d { bundles, out } => {
            let mut sets = Vec::new();
            for spec in &bundles {
                let Some((label, path)) = spec.split_once('=') else {
                    return Err(CliError::Usage(format!(
                        "--bundle expects LABEL=PATH, got '{spec}'"
                    )));
                };
                let path = PathBuf::from(path);
                sets.push((label.to_string(), open_bundle(&path)?.items));
            }
            let refs: Vec<(&str, &[Embedding])> = sets
                .iter()
                .map(|(l, i)| (l.as_str(), i.as_slice()))
                .collect();
            let p = pca2d(&refs)?;
            p.write_csv(&out)?;
            println!(
                "wrote {} points to {} (explained variance {}, {})",
                p.points.len(),
                out.display(),
                p.explained_variance[0],
                p.explained_variance[1]
            );
        }
        AnalyzeCmd::Trajectory {
            bundle,
            frames_tag,
            reference,
            subspace,
            out,
        } => {
            let b = open_bundle(&bundle)?;
            let frames: Vec<Vec<f64>> = b.with_tag(&frames_tag).map(|e| e.vector.clone()).collect();
            let reference = if reference == "first" {
                Reference::FirstFrame
            } else {
                Reference::Text(item(&b, &reference, &bundle)?.vector.clone())
            };
            let s = subspace.as_deref().map(open_subspace).transpose()?;
            let series = trajectory_similarity(&frames, &reference, s.as_ref()).source(&bundle)?;
            series.write_csv(&out)?;
            println!("wrote {} frames to {}", series.values.len(), out.display());
        }
        AnalyzeCmd::Heatmap {
            bundle,
            group_by,
            groups,
            subspace,
            out,
        } => {
            let b = open_bundle(&bundle)?;
            let s = subspace.as_deref().map(open_subspace).transpose()?;
            let order = (!groups.is_empty()).then_some(groups.as_slice());
            let h = group_heatmap(&b, &group_by, order, s.as_ref()).source(&bundle)?;
            h.write_csv(&out)?;
            println!(
                "wrote {} items to {} (block contrast {})",
                h.ids.len(),
                out.display(),
                h.block_contrast()
            );
        }
    }
    Ok(())
}
