"""Experiment harness: flat-file configuration with CLI overrides, named
presets for every headline curve and ablation row, the training loop, and
checkpointing with exact resume.

Per-component RNG streams are derived from the master seed with fixed labels,
so toggling one stochastic feature (e.g. reward dropout) never perturbs the
randomness of the others.
"""

from __future__ import annotations

import dataclasses
import io
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import metrics
from .agent import Batch, QPolicy, ReplayBuffer, collect_rollout, disc_update, dqn_update, make_policy
from .discriminator import AP, OVA, build_code_matrix
from .grids import ENV_NAMES, GridEnv, ascii_art, build_env
from .nn import AdamState, LinearModel, init_adam, init_linear
from .rewards import AP_KINDS, REWARD_KINDS, ConfigError, RewardSpec, WeightFn

CHECKPOINT_VERSION = 1

# fixed stream labels: changing one component's draws must not shift the others
_STREAMS = {"init": 0, "latent": 1, "action": 2, "batch": 3, "dropout": 4, "eval": 5}


def derive_rngs(seed: int) -> dict[str, np.random.Generator]:
    return {name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(label,))))
            for name, label in _STREAMS.items()}


@dataclass
class ExperimentConfig:
    """Fully-resolved experiment settings; defaults follow the reference
    hyperparameter table (batch 640, T=40, 100 latents, 50k buffer, Adam at
    2e-3, epsilon 0.001, gamma 0.99)."""

    env: str = "rooms"
    reward: str = "apart"
    beta: float = 10.0
    weight_fn: str = "quadratic"
    ascending: bool | None = None      # None -> kind default (on only for apart)
    dropout: bool | None = None
    disc: str = "auto"                 # 'ova'/'ap' must match the reward kind
    mask_dont_cares: bool = True
    obs_mode: str = "outer"
    policy: str = "dqn"                # 'random' for the random-walk reference
    n_latents: int = 100
    horizon: int = 40
    batch_size: int = 640
    buffer_capacity: int = 50_000
    lr_policy: float = 2e-3
    lr_disc: float = 2e-3
    gamma: float = 0.99
    epsilon: float = 0.001
    target_interval: int = 200
    total_steps: int = 5_000_000
    eval_every: int = 50_000
    seed: int = 0
    seeds: int = 1

    def reward_spec(self) -> RewardSpec:
        return RewardSpec(kind=self.reward, beta=self.beta,
                          weight_fn=WeightFn(self.weight_fn),
                          ascending=self.ascending, dropout=self.dropout)

    @property
    def disc_mode(self) -> str:
        return "ap" if self.reward in AP_KINDS else "ova"

    @property
    def disc_beta(self) -> float:
        return self.beta if self.reward == "tuned_vic" else 1.0

    def validate(self) -> "ExperimentConfig":
        if self.env not in ENV_NAMES:
            raise ConfigError(f"unknown env {self.env!r}; expected one of {ENV_NAMES}")
        if self.reward not in REWARD_KINDS:
            raise ConfigError(f"unknown reward {self.reward!r}; expected one of {REWARD_KINDS}")
        self.reward_spec()  # validates beta / weight_fn
        if self.disc not in ("auto", OVA, AP):
            raise ConfigError(f"disc must be auto/ova/ap, got {self.disc!r}")
        if self.disc != "auto" and self.disc != self.disc_mode:
            raise ConfigError(f"reward {self.reward!r} needs a {self.disc_mode} discriminator, "
                              f"not {self.disc!r}")
        if self.obs_mode not in ("outer", "concat"):
            raise ConfigError(f"obs_mode must be outer or concat, got {self.obs_mode!r}")
        if self.policy not in ("dqn", "random"):
            raise ConfigError(f"policy must be dqn or random, got {self.policy!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ConfigError("epsilon must be in [0, 1]")
        if not 0.0 <= self.gamma < 1.0:
            raise ConfigError("gamma must be in [0, 1)")
        for name in ("n_latents", "horizon", "batch_size", "buffer_capacity",
                     "target_interval", "eval_every", "seeds"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        for name in ("lr_policy", "lr_disc"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.total_steps < 0:
            raise ConfigError("total_steps must be >= 0")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}
_TRUE = ("1", "true", "on", "yes")
_FALSE = ("0", "false", "off", "no")


def _coerce(key: str, raw: str):
    f = _FIELDS[key]
    raw = raw.strip()
    if f.type == "bool | None":
        if raw.lower() in ("auto", "none"):
            return None
        if raw.lower() in _TRUE:
            return True
        if raw.lower() in _FALSE:
            return False
        raise ConfigError(f"{key}: expected on/off/auto, got {raw!r}")
    if f.type == "bool":
        if raw.lower() in _TRUE:
            return True
        if raw.lower() in _FALSE:
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    if f.type == "int":
        try:
            return int(raw.replace("_", ""))
        except ValueError as e:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from e
    if f.type == "float":
        try:
            return float(raw)
        except ValueError as e:
            raise ConfigError(f"{key}: expected a number, got {raw!r}") from e
    return raw


def load_config(path: str | Path | None = None,
                overrides: dict[str, str] | None = None,
                text: str | None = None) -> ExperimentConfig:
    """Parse a flat key=value file (or raw text), apply overrides (overrides
    win), and validate."""
    values: dict[str, object] = {}

    def apply(key: str, raw: str, where: str) -> None:
        key = key.strip()
        if key not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r} in {where}")
        values[key] = _coerce(key, raw)

    if path is not None:
        text = Path(path).read_text()
    if text is not None:
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, raw = line.split("=", 1)
            apply(key, raw, f"line {lineno}")
    for key, raw in (overrides or {}).items():
        apply(key, str(raw), "overrides")

    return ExperimentConfig(**values).validate()


def echo_config(cfg: ExperimentConfig) -> str:
    """Bit-exact echo of the resolved configuration, one key=value per line."""
    lines = []
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(cfg, f.name)
        if v is None:
            v = "auto"
        elif isinstance(v, bool):
            v = "on" if v else "off"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name}={v}")
    return "\n".join(lines) + "\n"


# One preset per headline curve and per reward-type ablation row.
PRESETS: dict[str, dict[str, str]] = {
    "apart": {"reward": "apart"},
    "ap_min_plain": {"reward": "ap_min"},
    "ap_min_asc": {"reward": "ap_min", "ascending": "on"},
    "ap_min_drop": {"reward": "ap_min", "dropout": "on"},
    "ap_average": {"reward": "ap_average"},
    "ap_average_art": {"reward": "ap_average", "ascending": "on", "dropout": "on"},
    "diayn": {"reward": "diayn"},
    "ova_asc": {"reward": "diayn", "ascending": "on"},
    "ova_drop": {"reward": "diayn", "dropout": "on"},
    "ova_art": {"reward": "diayn", "ascending": "on", "dropout": "on"},
    "vic": {"reward": "vic"},
    "tuned_vic_b10": {"reward": "tuned_vic", "beta": "10"},
    "random_walk": {"policy": "random"},
}


def preset(name: str, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    merged = dict(PRESETS[name])
    merged.update(overrides or {})
    return load_config(overrides=merged)


class _RunState:
    """Everything a single-seed run owns; checkpointable."""

    def __init__(self, cfg: ExperimentConfig, seed: int):
        self.cfg = cfg
        self.seed = seed
        self.env: GridEnv = build_env(cfg.env, horizon=cfg.horizon)
        self.rngs = derive_rngs(seed)
        init_rng = self.rngs["init"]
        self.policy: QPolicy = make_policy(
            self.env, cfg.n_latents, init_rng, obs_mode=cfg.obs_mode,
            lr=cfg.lr_policy, epsilon=cfg.epsilon if cfg.policy == "dqn" else 1.0,
            gamma=cfg.gamma, target_interval=cfg.target_interval)
        k = cfg.n_latents
        if cfg.disc_mode == AP:
            self.code = build_code_matrix(k)
            n_out = self.code.n_pairs
        else:
            self.code = None
            n_out = k
        self.disc_model: LinearModel = init_linear(self.env.n_free, n_out, init_rng)
        self.disc_opt: AdamState = init_adam(self.disc_model, cfg.lr_disc)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.spec: RewardSpec = cfg.reward_spec()
        self.env_steps = 0
        self.updates = 0
        self.reward_sum = 0.0
        self.reward_count = 0


def _rng_states(rngs: dict[str, np.random.Generator]) -> dict:
    return {name: g.bit_generator.state for name, g in rngs.items()}


def _restore_rngs(states: dict) -> dict[str, np.random.Generator]:
    rngs = {}
    for name in _STREAMS:
        g = np.random.Generator(np.random.PCG64())
        g.bit_generator.state = states[name]
        rngs[name] = g
    return rngs


def save_checkpoint(path: str | Path, st: _RunState) -> None:
    """Flat npz dump of parameters, optimizer moments, buffer, counters, and
    RNG states, with a version header; sufficient for exact resume."""
    buf_cols, buf_size, buf_cursor = st.buffer.state_arrays()
    meta = {
        "version": CHECKPOINT_VERSION,
        "seed": st.seed,
        "env_steps": st.env_steps,
        "updates": st.updates,
        "policy_updates": st.policy.updates,
        "adam_t_policy": st.policy.opt.t,
        "adam_t_disc": st.disc_opt.t,
        "reward_sum": st.reward_sum,
        "reward_count": st.reward_count,
        "rng": _rng_states(st.rngs),
        "config": echo_config(st.cfg),
    }
    arrays = {
        "policy_w": st.policy.model.weights, "policy_b": st.policy.model.bias,
        "target_w": st.policy.target_model.weights, "target_b": st.policy.target_model.bias,
        "policy_m_w": st.policy.opt.m_w, "policy_v_w": st.policy.opt.v_w,
        "policy_m_b": st.policy.opt.m_b, "policy_v_b": st.policy.opt.v_b,
        "disc_w": st.disc_model.weights, "disc_b": st.disc_model.bias,
        "disc_m_w": st.disc_opt.m_w, "disc_v_w": st.disc_opt.v_w,
        "disc_m_b": st.disc_opt.m_b, "disc_v_b": st.disc_opt.v_b,
        "buffer": buf_cols, "buffer_size": np.int64(buf_size), "buffer_cursor": np.int64(buf_cursor),
        "meta": np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
    }
    path = Path(path)
    tmp = path.with_suffix(".tmp.npz")
    np.savez(tmp, **arrays)
    tmp.replace(path)


def load_checkpoint(path: str | Path) -> _RunState:
    with np.load(Path(path)) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint version {meta['version']} != {CHECKPOINT_VERSION}")
        cfg = load_config(text=meta["config"])
        st = _RunState(cfg, meta["seed"])
        st.policy.model.weights[...] = data["policy_w"]
        st.policy.model.bias[...] = data["policy_b"]
        st.policy.target_model.weights[...] = data["target_w"]
        st.policy.target_model.bias[...] = data["target_b"]
        st.policy.opt.m_w[...] = data["policy_m_w"]
        st.policy.opt.v_w[...] = data["policy_v_w"]
        st.policy.opt.m_b[...] = data["policy_m_b"]
        st.policy.opt.v_b[...] = data["policy_v_b"]
        st.policy.opt.t = meta["adam_t_policy"]
        st.policy.updates = meta["policy_updates"]
        st.disc_model.weights[...] = data["disc_w"]
        st.disc_model.bias[...] = data["disc_b"]
        st.disc_opt.m_w[...] = data["disc_m_w"]
        st.disc_opt.v_w[...] = data["disc_v_w"]
        st.disc_opt.m_b[...] = data["disc_m_b"]
        st.disc_opt.v_b[...] = data["disc_v_b"]
        st.disc_opt.t = meta["adam_t_disc"]
        st.buffer._cols[...] = data["buffer"]
        st.buffer.size = int(data["buffer_size"])
        st.buffer.cursor = int(data["buffer_cursor"])
        st.env_steps = meta["env_steps"]
        st.updates = meta["updates"]
        st.reward_sum = meta["reward_sum"]
        st.reward_count = meta["reward_count"]
        st.rngs = _restore_rngs(meta["rng"])
    return st


def _eval_record(st: _RunState) -> metrics.EvalRecord:
    cfg = st.cfg
    if cfg.policy == "random":
        finals = metrics.random_walk_final_states(st.env, cfg.n_latents, st.rngs["eval"])
        n_eff = int(len(np.unique(finals)))
    else:
        n_eff = metrics.effective_skills(st.env, st.policy, cfg.n_latents)
    acc = metrics.disc_accuracy_per_step(st.env, st.policy, st.disc_model,
                                         cfg.disc_mode, st.code, cfg.n_latents)
    mean_r = st.reward_sum / st.reward_count if st.reward_count else 0.0
    return metrics.EvalRecord(env_steps=st.env_steps, seed=st.seed,
                              n_effective=n_eff, mean_reward=mean_r,
                              disc_accuracy=acc)


def _write_final_skills(path: Path, st: _RunState) -> None:
    lines = ["skill,final_state_x,final_state_y"]
    if st.cfg.policy == "random":
        finals = metrics.random_walk_final_states(st.env, st.cfg.n_latents, st.rngs["eval"])
    else:
        finals = metrics.final_states(st.env, st.policy, st.cfg.n_latents)
    for z, fi in enumerate(finals):
        x, y = st.env.cell_xy(int(st.env.free_states[fi]))
        lines.append(f"{z},{x},{y}")
    path.write_text("\n".join(lines) + "\n")


def run_single(cfg: ExperimentConfig, seed: int, run_dir: str | Path,
               resume: bool = False) -> Path:
    """Train one seed, writing metrics.csv, rewards.csv, env.txt, config.txt,
    checkpoint.npz and final_skills.csv into ``run_dir``."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    ckpt_path = run_dir / "checkpoint.npz"

    if resume and ckpt_path.exists():
        st = load_checkpoint(ckpt_path)
        if st.seed != seed:
            raise ConfigError(f"checkpoint seed {st.seed} != requested seed {seed}")
        strip = lambda echo: "\n".join(l for l in echo.splitlines()
                                       if not l.startswith("total_steps="))
        if strip(echo_config(st.cfg)) != strip(echo_config(cfg)):
            raise ConfigError("checkpoint config does not match the requested config")
        st.cfg = cfg  # total_steps may be extended on resume
        metrics_f = open(run_dir / "metrics.csv", "a", newline="")
        rewards_f = open(run_dir / "rewards.csv", "a", newline="")
    else:
        st = _RunState(cfg, seed)
        (run_dir / "config.txt").write_text(echo_config(cfg))
        (run_dir / "env.txt").write_text(ascii_art(st.env) + "\n")
        metrics_f = open(run_dir / "metrics.csv", "w", newline="")
        metrics_f.write(metrics.csv_header(cfg.horizon) + "\n")
        rewards_f = open(run_dir / "rewards.csv", "w", newline="")
        rewards_f.write("update,env_steps,mean_reward\n")
        metrics_f.write(metrics.csv_row(_eval_record(st)) + "\n")

    train = cfg.policy == "dqn"
    try:
        while st.env_steps < cfg.total_steps:
            z = int(st.rngs["latent"].integers(cfg.n_latents))
            collect_rollout(st.env, st.policy, z, st.buffer, st.rngs["action"])
            prev = st.env_steps
            st.env_steps += cfg.horizon

            if train:
                batch = st.buffer.sample(cfg.batch_size, st.rngs["batch"])
                td_loss, mean_r = dqn_update(
                    st.env, st.policy, st.disc_model, st.code, st.spec, st.buffer,
                    batch=batch, dropout_rng=st.rngs["dropout"], disc_beta=cfg.disc_beta)
                disc_loss = disc_update(st.env, st.disc_model, batch, st.code,
                                        cfg.disc_mode, cfg.mask_dont_cares,
                                        st.disc_opt, beta=cfg.disc_beta)
                if not (np.isfinite(td_loss) and np.isfinite(disc_loss) and np.isfinite(mean_r)):
                    raise RuntimeError(
                        f"non-finite training signal at env_steps={st.env_steps}: "
                        f"td_loss={td_loss} disc_loss={disc_loss} mean_reward={mean_r}")
                st.updates += 1
                st.reward_sum += mean_r
                st.reward_count += 1
                rewards_f.write(f"{st.updates},{st.env_steps},{mean_r!r}\n")

            if prev // cfg.eval_every != st.env_steps // cfg.eval_every:
                metrics_f.write(metrics.csv_row(_eval_record(st)) + "\n")
                metrics_f.flush()
                st.reward_sum = 0.0
                st.reward_count = 0
                save_checkpoint(ckpt_path, st)
    finally:
        metrics_f.close()
        rewards_f.close()

    save_checkpoint(ckpt_path, st)
    _write_final_skills(run_dir / "final_skills.csv", st)
    return run_dir


def run_experiment(cfg: ExperimentConfig, out_dir: str | Path,
                   resume: bool = False) -> Path:
    """Run every seed of the experiment under ``out_dir`` (one subdir per seed)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(echo_config(cfg))
    for i in range(cfg.seeds):
        seed = cfg.seed + i
        run_single(cfg, seed, out_dir / f"seed_{seed}", resume=resume)
    return out_dir
