"""Straight-line reference enumeration used to cross-check the router.

Re-derives the whole decision (candidate space, predictions, constraint
filter, objective ranking, tie-break) with plain loops and inline affine
arithmetic, reading only raw store data. Intentionally shares no code with
wattroute.router / wattroute.estimators; expressions mirror the documented
contracts operation for operation so float results are bit-identical.

Only affine curves are supported, which is all the randomized trials use.
"""

JOULES_PER_KWH = 3.6e6


def _affine(curve, n):
    return curve.params[0] + curve.params[1] * float(n)


def _accuracy_from_table(store, category, model_id, strategy_key):
    exact = None
    rows = []
    for rec in store.benchmarks.values():
        if rec.model_id == model_id and str(rec.strategy) == strategy_key:
            rows.append(rec)
            if rec.category == category:
                exact = rec
    if exact is not None:
        return exact.accuracy
    if rows:
        return sum(r.accuracy for r in rows) / len(rows)
    return None


def _schedule_accuracy(schedule, category, budget):
    if category in schedule.accuracy_by_budget:
        return schedule.accuracy_by_budget[category][budget]
    maps = list(schedule.accuracy_by_budget.values())
    return sum(m[budget] for m in maps) / len(maps)


def _energy(store, model_id, hardware_id, q, out_tokens, repetitions):
    icurve = store.curves.get((model_id, hardware_id, "input"))
    gcurve = store.curves.get((model_id, hardware_id, "generation"))
    if icurve is None or gcurve is None or gcurve.ref_input_tokens is None:
        return None
    input_once = max(_affine(icurve, q.input_tokens) - _affine(icurve, gcurve.ref_input_tokens), 0.0)
    gen_once = _affine(gcurve, out_tokens)
    input_energy = repetitions * input_once
    gen_energy = repetitions * gen_once
    total = input_energy + gen_energy
    carbon = total / JOULES_PER_KWH * q.environment.carbon_intensity
    return total, carbon


def reference_route(q, policy, store, schedule=None):
    """Returns ("ok", chosen_action_id, feasible_count) or ("infeasible", None, 0)."""
    candidates = []  # (action_id, accuracy, energy, carbon, model)
    for model_id in policy.candidate_models:
        for kind in policy.candidate_strategies:
            if kind == "zero_shot":
                specs = [("zero_shot", policy.expected_output_tokens, 1)]
            elif kind == "mv":
                specs = [(f"mv:{policy.mv_k}", policy.expected_output_tokens, policy.mv_k)]
            else:
                if schedule is not None:
                    budgets = [b for b in schedule.grid if b > 0]
                else:
                    budgets = [64, 128, 256, 512]
                specs = [
                    (f"cot:{policy.cot_max_steps}:{b}", b, 1) for b in budgets
                ]
            for strategy_key, out_tokens, reps in specs:
                if strategy_key.startswith("cot") and schedule is not None:
                    budget = int(strategy_key.split(":")[2])
                    acc = _schedule_accuracy(schedule, q.category, budget)
                else:
                    acc = _accuracy_from_table(store, q.category, model_id, strategy_key)
                if acc is None:
                    continue
                result = _energy(store, model_id, policy.hardware_id, q, out_tokens, reps)
                if result is None:
                    continue
                energy, carbon = result
                candidates.append((f"{model_id}:{strategy_key}", acc, energy, carbon, model_id))

    feasible = []
    for action_id, acc, energy, carbon, model_id in candidates:
        c = q.constraints
        if c.accuracy_floor is not None and acc < c.accuracy_floor:
            continue
        if c.energy_budget is not None and energy > c.energy_budget:
            continue
        feasible.append((action_id, acc, energy, model_id))
    if not feasible:
        return ("infeasible", None, 0)

    scale = max(e for _, _, e, _ in feasible)
    if scale <= 0:
        scale = 1.0

    def rank(entry):
        action_id, acc, energy, model_id = entry
        if policy.objective == "max_accuracy":
            primary = -acc
        elif policy.objective == "min_energy":
            primary = energy
        else:
            primary = -(acc - policy.lambda_weight * (energy / scale))
        try:
            size_rank = policy.model_size_rank.index(model_id)
        except ValueError:
            size_rank = len(policy.model_size_rank)
        return (primary, energy, size_rank, action_id)

    winner = min(feasible, key=rank)
    return ("ok", winner[0], len(feasible))
