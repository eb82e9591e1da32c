#!/usr/bin/env python3
"""Rebuild the bundled data fixtures under src/wattroute/data/.

- benchmarks_mmlu_llama.csv: published per-category MMLU accuracy/energy
  results for Llama 3.2 1B (zero-shot baseline) with 8B, majority-voting and
  chain-of-thought variants; non-baseline energies are materialized from the
  published percentage deltas against the baseline.
- measurements_l40s.csv: synthetic noiseless measurement runs drawn from
  declared powerlaw ground truths per (model, phase), shaped so the fitted
  curves preserve the benchmark table's qualitative energy orderings.
- schedule_default.json: accuracy-vs-token-budget maps interpolating each
  category's zero-shot accuracy (budget 0) up to its chain-of-thought
  accuracy (budget 512).
- policy_default.json: a max-accuracy routing policy over both models.
"""

import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "wattroute" / "data"

# category: (zs1b_acc, zs1b_kj, acc8b, d_e8b_pct, acc_mv, d_e_mv_pct, acc_cot, d_e_cot_pct)
TABLE = {
    "Computer Science": (0.38, 78556, 0.56, 42, 0.39, 118, 0.43, 13858),
    "Economics": (0.40, 80437, 0.62, 65, 0.42, 177, 0.42, 13211),
    "Engineering": (0.37, 74805, 0.75, 36, 0.44, 72, 0.43, 12233),
    "Health": (0.50, 78484, 0.78, 44, 0.54, 108, 0.55, 14339),
    "Humanities": (0.44, 79029, 0.72, 63, 0.46, 174, 0.45, 13334),
    "Math": (0.11, 83532, 0.39, 37, 0.11, 88, 0.31, 15132),
    "Natural Sciences": (0.26, 76172, 0.54, 41, 0.27, 102, 0.29, 15483),
    "Sociology": (0.47, 76673, 0.82, 40, 0.48, 97, 0.60, 13198),
}

# (model, phase) -> (a, b, c) of a*n^b + c joules; generation runs use a
# fixed 32-token input prompt
CURVES = {
    ("llama-1b", "input"): (0.004, 1.05, 0.5),
    ("llama-8b", "input"): (0.007, 1.05, 0.7),
    ("llama-1b", "generation"): (0.4, 1.25, 2.0),
    ("llama-8b", "generation"): (0.55, 1.22, 3.0),
}
REF_INPUT_TOKENS = 32
HARDWARE = "l40s"
INPUT_GRID = [8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512, 768]
GEN_GRID = [1, 2, 4, 8, 16, 32, 64, 96, 128, 192, 256, 384, 512]

BUDGET_GRID = [0, 64, 128, 256, 512]
# hand-tuned faster-rising curve for the structured category
MATH_SCHEDULE = {0: 0.11, 64: 0.20, 128: 0.27, 256: 0.30, 512: 0.31}


def write_benchmarks():
    lines = ["category,model_id,strategy,accuracy,energy_kj,n_questions"]
    for cat, (a1, e1, a8, d8, amv, dmv, acot, dcot) in TABLE.items():
        lines.append(f"{cat},llama-1b,zero_shot,{a1!r},{e1!r},")
        lines.append(f"{cat},llama-8b,zero_shot,{a8!r},{e1 * (1 + d8 / 100)!r},")
        lines.append(f"{cat},llama-1b,mv:16,{amv!r},{e1 * (1 + dmv / 100)!r},")
        lines.append(f"{cat},llama-1b,cot:5:512,{acot!r},{e1 * (1 + dcot / 100)!r},")
    (OUT / "benchmarks_mmlu_llama.csv").write_text("\n".join(lines) + "\n")


def write_measurements():
    lines = [
        "model_id,hardware_id,phase,input_tokens,generated_tokens,"
        "avg_power_w,duration_s,energy_j,gpu_util,batch_size"
    ]
    for (model, phase), (a, b, c) in CURVES.items():
        grid = INPUT_GRID if phase == "input" else GEN_GRID
        for n in grid:
            energy = a * n**b + c
            if phase == "input":
                in_tok, gen_tok = n, 1
                duration = 0.05 + 0.0004 * n
                util = ""
            else:
                in_tok, gen_tok = REF_INPUT_TOKENS, n
                duration = 0.1 + 0.03 * n
                util = "0.9"
            power = energy / duration
            lines.append(
                f"{model},{HARDWARE},{phase},{in_tok},{gen_tok},"
                f"{power!r},{duration!r},{energy!r},{util},1"
            )
    (OUT / "measurements_l40s.csv").write_text("\n".join(lines) + "\n")


def write_schedule():
    by_category = {}
    for cat, (a1, _e1, _a8, _d8, _amv, _dmv, acot, _dc) in TABLE.items():
        if cat == "Math":
            by_category[cat] = {str(b): MATH_SCHEDULE[b] for b in BUDGET_GRID}
            continue
        delta = acot - a1
        curve = {}
        prev = 0.0
        for budget in BUDGET_GRID:
            if budget == 0:
                acc = a1
            elif budget == BUDGET_GRID[-1]:
                acc = acot
            else:
                acc = round(a1 + delta * (budget / BUDGET_GRID[-1]) ** 0.5, 2)
            acc = max(acc, prev)
            curve[str(budget)] = acc
            prev = acc
        by_category[cat] = curve
    doc = {
        "grid": BUDGET_GRID,
        "accuracy_by_budget": by_category,
        "marginal_threshold": 5e-5,
    }
    (OUT / "schedule_default.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def write_policy():
    doc = {
        "objective": "max_accuracy",
        "candidate_models": ["llama-1b", "llama-8b"],
        "candidate_strategies": ["zero_shot", "mv", "cot"],
        "mv_k": 16,
        "lambda_weight": 1.0,
        "hardware_id": HARDWARE,
        "expected_output_tokens": 1,
        "cot_max_steps": 5,
        "mv_uncertainty_width": 0.2,
        "model_size_rank": ["llama-1b", "llama-8b"],
    }
    (OUT / "policy_default.json").write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    write_benchmarks()
    write_measurements()
    write_schedule()
    write_policy()
    print(f"fixtures written to {OUT}")
