"""
Pipeline orchestration - where the stages get chained together.

The whole experiment, start to finish:
1. Preprocess (tokenize train / validation / test)
2. Train N members, one per seed (seed = base + member index)
3. Cache every member's class probabilities on disk
4. Search all member subsets on the validation set
5. Score the winning subset and write the reports
6. Write a manifest with every input and output digest

Each stage reads what the previous one wrote, so the analyses never have
to retrain anything. Same inputs and seeds give byte-identical outputs.
"""

from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence

from logzero import logger

from app import __version__
from app.analysis.metrics import compute_metrics
from app.analysis.reports import (
    BY_SIZE_HEADER,
    SUBSET_HEADER,
    by_size_rows,
    metrics_tsv,
    subset_rows,
    to_json,
    tsv,
)
from app.config import ExperimentConfig
from app.ensemble import (
    PROBA_SUFFIX,
    ProbabilityMatrix,
    average_probs,
    best_by_size,
    load_proba,
    predict_labels,
    save_proba,
    search_best_subset,
)
from app.model.checkpoint import load_model, save_model
from app.schemas import EMOTIONS, RunManifest
from app.tokenizer import TweetTokenizer, load_emoji_db
from app.training.trainer import fit, history_csv
from app.utils.dataset import Example, LabeledSet, file_digest, gold_labels, labeled_set, load_examples, token_batches
from app.utils.parallel import run_jobs

CHECKPOINT_SUFFIX = ".ckpt"


def build_tokenizer(config: ExperimentConfig, emoji_db: Optional[str] = None) -> TweetTokenizer:
    return TweetTokenizer(load_emoji_db(emoji_db), lowercase=config.preprocess.lowercase)


def member_seeds(base_seed: int, count: int) -> List[int]:
    if count < 1:
        raise ValueError("need at least one ensemble member")
    return [base_seed + i for i in range(count)]


def member_name(seed: int) -> str:
    return f"model_seed{seed}"


# =============================================
# Stage 2: training members
# =============================================

class MemberJob(NamedTuple):
    train: LabeledSet
    val: LabeledSet
    config: ExperimentConfig
    seed: int
    out_dir: str
    progress: bool = False


class MemberOutcome(NamedTuple):
    seed: int
    checkpoint: str
    history: str
    best_epoch: int
    best_val_accuracy: float


def train_member(job: MemberJob) -> MemberOutcome:
    """Fit one member and write its checkpoint and history. Module-level so pools can pickle it."""
    config = job.config.with_overrides({"seed": job.seed})
    result = fit(job.train, job.val, config, progress=job.progress)
    out = Path(job.out_dir)
    checkpoint = out / f"{member_name(job.seed)}{CHECKPOINT_SUFFIX}"
    history = out / f"{member_name(job.seed)}.history.csv"
    save_model(result.model, str(checkpoint), config)
    history.write_text(history_csv(result.history), encoding="utf-8")
    return MemberOutcome(job.seed, str(checkpoint), str(history), result.best_epoch, result.best_val_accuracy)


def train_members(train: LabeledSet, val: LabeledSet, config: ExperimentConfig, seeds: Sequence[int],
                  out_dir: str, jobs: int = 1, progress: bool = False) -> List[MemberOutcome]:
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    work = [MemberJob(train, val, config, seed, out_dir, progress and jobs == 1) for seed in seeds]
    outcomes = run_jobs(train_member, work, jobs)
    for o in outcomes:
        logger.info(f"member seed={o.seed}: best epoch {o.best_epoch}, val_acc={o.best_val_accuracy:.4f}")
    return outcomes


# =============================================
# Stage 3: probability caches
# =============================================

def cache_probabilities(checkpoints: Sequence[str], examples: Sequence[Example], out_dir: str) -> List[str]:
    """Predict with each checkpoint and write `<stem>.proba` + `.order` into out_dir."""
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    batch = token_batches(examples)
    order = [e.digest for e in examples]
    written = []
    for ckpt in checkpoints:
        model = load_model(ckpt)
        matrix = ProbabilityMatrix(model_id=Path(ckpt).stem, probs=model.predict_proba(batch))
        path = Path(out_dir) / f"{Path(ckpt).stem}{PROBA_SUFFIX}"
        save_proba(str(path), matrix, order)
        written.append(str(path))
    return written


# =============================================
# The whole thing
# =============================================

class IESTPipeline:
    """
    Preprocess, train, cache, ensemble, evaluate, manifest.

    One object per run. Holds the config and the tokenizer so every stage
    sees the same preprocessing.
    """

    def __init__(self, config: ExperimentConfig, tokenizer: TweetTokenizer, jobs: int = 1, progress: bool = False):
        self.config = config
        self.tokenizer = tokenizer
        self.jobs = jobs
        self.progress = progress

    def load(self, path: str) -> List[Example]:
        return load_examples(path, self.tokenizer, strip=self.config.preprocess.strip_emoji)

    def run(self, train_path: str, val_path: str, out_dir: str, num_models: int = 1,
            test_path: Optional[str] = None, top: int = 20) -> RunManifest:
        """
        Run every stage and return the manifest (also written to out_dir/manifest.json).

        Raises:
            DataFormatError: bad dataset files
            NumericalError: a member diverged
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        artifacts: Dict[str, str] = {}

        # ============================================
        # STEP 1: Preprocess
        # ============================================
        train_examples = self.load(train_path)
        val_examples = self.load(val_path)
        test_examples = self.load(test_path) if test_path else None
        logger.info(
            f"Loaded {len(train_examples)} train / {len(val_examples)} val"
            + (f" / {len(test_examples)} test" if test_examples else "")
            + " examples"
        )

        # ============================================
        # STEP 2: Train the members
        # ============================================
        seeds = member_seeds(self.config.train.seed, num_models)
        outcomes = train_members(
            labeled_set(train_examples), labeled_set(val_examples), self.config, seeds,
            str(out / "models"), jobs=self.jobs, progress=self.progress,
        )
        for o in outcomes:
            artifacts[f"checkpoint.{o.seed}"] = o.checkpoint
            artifacts[f"history.{o.seed}"] = o.history
        checkpoints = [o.checkpoint for o in outcomes]

        # ============================================
        # STEP 3: Cache probabilities
        # ============================================
        val_caches = cache_probabilities(checkpoints, val_examples, str(out / "proba" / "val"))
        artifacts.update({f"proba.val.{s}": p for s, p in zip(seeds, val_caches)})
        test_caches: List[str] = []
        if test_examples:
            test_caches = cache_probabilities(checkpoints, test_examples, str(out / "proba" / "test"))
            artifacts.update({f"proba.test.{s}": p for s, p in zip(seeds, test_caches)})

        # ============================================
        # STEP 4: Subset search on validation
        # ============================================
        members = [load_proba(p)[0] for p in val_caches]
        results = search_best_subset(members, gold_labels(val_examples), jobs=self.jobs)
        best = results[0]
        logger.info(f"Best subset {best.members} (size {best.size}) val_acc={best.accuracy:.4f}")
        artifacts["subsets"] = self._write(out / "subsets.tsv", tsv(SUBSET_HEADER, subset_rows(results, top)))
        artifacts["by_size"] = self._write(out / "by_size.tsv", tsv(BY_SIZE_HEADER, by_size_rows(best_by_size(results))))

        # ============================================
        # STEP 5: Score the winner
        # ============================================
        chosen = [i for i in range(len(seeds)) if best.bitmask >> i & 1]
        eval_examples, eval_caches = (test_examples, test_caches) if test_examples else (val_examples, val_caches)
        averaged = average_probs([load_proba(eval_caches[i])[0] for i in chosen])
        predicted = [EMOTIONS[i] for i in predict_labels(averaged.probs)]
        report = compute_metrics(gold_labels(eval_examples), predicted)
        logger.info(f"Ensemble accuracy {report.accuracy:.4f}, macro F1 {report.macro_f1:.4f}")
        artifacts["predictions"] = self._write(out / "predictions.txt", "".join(f"{p}\n" for p in predicted))
        artifacts["metrics_tsv"] = self._write(out / "metrics.tsv", metrics_tsv(report))
        artifacts["metrics_json"] = self._write(out / "metrics.json", to_json(report))

        # ============================================
        # FINAL: Manifest
        # ============================================
        inputs = {"train": train_path, "val": val_path}
        if test_path:
            inputs["test"] = test_path
        manifest = RunManifest(
            tool_version=__version__,
            config=self.config.to_flat(),
            seeds=seeds,
            dataset_digests={name: file_digest(path) for name, path in inputs.items()},
            artifacts={name: str(Path(path).relative_to(out)) for name, path in sorted(artifacts.items())},
            artifact_digests={name: file_digest(path) for name, path in sorted(artifacts.items())},
        )
        (out / "manifest.json").write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return manifest

    @staticmethod
    def _write(path: Path, text: str) -> str:
        path.write_text(text, encoding="utf-8")
        return str(path)
