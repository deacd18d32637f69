"""JSON model/system files and DOT export."""

import json
from pathlib import Path

from .automaton import TAU, Automaton, ModelError, PairEvent
from .compose import ModularSystem, SecretMode
from .verdict import event_str, is_psi


def state_name(label):
    if isinstance(label, str):
        return label
    if isinstance(label, tuple):
        return "(" + ",".join(state_name(x) for x in label) + ")"
    if isinstance(label, frozenset):
        return "{" + ",".join(sorted(state_name(x) for x in label)) + "}"
    return str(label)


def set_name(labels):
    return "{" + ",".join(state_name(x) for x in labels) + "}"


def _where(source, field):
    return f"{source}: {field}" if source else field


def model_from_dict(data, source="", allow_reserved=False):
    """Build an automaton from the JSON model schema; errors name the offending field.

    ψ labels are rejected unless ``allow_reserved`` (used when re-reading
    ψ-systems written by the ``psi`` command).
    """
    if not isinstance(data, dict):
        raise ModelError(_where(source, "model must be a JSON object"))
    tau_label = data.get("tau_label", "tau")
    try:
        alphabet = list(data["alphabet"])
        states = data["states"]
        transitions = data.get("transitions", [])
    except KeyError as exc:
        raise ModelError(_where(source, f"missing field {exc.args[0]!r}")) from None
    for e in alphabet:
        if not isinstance(e, str):
            raise ModelError(_where(source, f"alphabet entry {e!r} is not a string"))
        if e == tau_label:
            raise ModelError(_where(source, f"alphabet declares the unobservable label {tau_label!r}"))
        if is_psi(e) and not allow_reserved:
            raise ModelError(_where(source, f"alphabet uses reserved label {e!r}"))
    names, initial, marked, secret = [], [], [], []
    for i, st in enumerate(states):
        if isinstance(st, str):
            st = {"name": st}
        if not isinstance(st, dict) or "name" not in st:
            raise ModelError(_where(source, f"states[{i}] needs a 'name'"))
        name = str(st["name"])
        names.append(name)
        if st.get("initial"):
            initial.append(name)
        if st.get("marked"):
            marked.append(name)
        if st.get("secret"):
            secret.append(name)
    trans = []
    for i, t in enumerate(transitions):
        if not isinstance(t, (list, tuple)) or len(t) != 3:
            raise ModelError(_where(source, f"transitions[{i}] must be [src, event, dst]"))
        x, e, y = t
        trans.append((str(x), TAU if e == tau_label else e, str(y)))
    try:
        return Automaton.build(alphabet, names, trans, initial, marked, secret, name=data.get("name", ""))
    except ModelError as exc:
        raise ModelError(_where(source, str(exc))) from None


def _read_json(path):
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


def load_model(path, allow_reserved=False) -> Automaton:
    return model_from_dict(_read_json(path), str(path), allow_reserved)


def load_system(path, mode=None, allow_reserved=False) -> ModularSystem:
    """Load a system file; a bare model file is accepted as a one-component system."""
    path = Path(path)
    data = _read_json(path)
    if isinstance(data, dict) and "components" not in data and "alphabet" in data:
        return ModularSystem([model_from_dict(data, str(path), allow_reserved)], mode or SecretMode.OR)
    if not isinstance(data, dict) or not isinstance(data.get("components"), list):
        raise ModelError(f"{path}: system file needs a 'components' list")
    comps = []
    for i, c in enumerate(data["components"]):
        if isinstance(c, str):
            comps.append(load_model(path.parent / c, allow_reserved))
        else:
            comps.append(model_from_dict(c, f"{path}: components[{i}]", allow_reserved))
    if not comps:
        raise ModelError(f"{path}: system has no components")
    return ModularSystem(comps, mode or data.get("mode", "or"))


def _event_json(e):
    if isinstance(e, PairEvent):
        return str(e)
    return e if isinstance(e, str) else str(e)


def model_to_dict(a: Automaton, names=None, tau_label="tau"):
    """Serialize to the JSON model schema (states in id order, transitions sorted)."""
    names = names or [state_name(s) for s in a.states]
    if len(set(names)) != len(names):
        names = [f"{n}#{i}" for i, n in enumerate(names)]
    out = {
        "alphabet": [_event_json(e) for e in a.events],
        "tau_label": tau_label,
        "states": [
            {
                "name": names[i],
                "initial": i in a.initial,
                "marked": i in a.marked,
                "secret": i in a.secret,
            }
            for i in range(a.n_states)
        ],
        "transitions": [
            [names[x], tau_label if k < 0 else _event_json(a.events[k]), names[y]]
            for x, k, y in zip(a.src.tolist(), a.ev.tolist(), a.dst.tolist())
        ],
    }
    if a.name:
        out = {"name": a.name, **out}
    return out


def system_to_dict(sys: ModularSystem):
    return {"mode": sys.mode.value, "components": [model_to_dict(c) for c in sys.components]}


def dumps(obj):
    return json.dumps(obj, indent=2, ensure_ascii=False)


def to_dot(a: Automaton, names=None, title=None):
    """Graphviz source: secret states double-circled, marked states shaded."""
    names = names or [state_name(s) for s in a.states]
    lines = [f'digraph "{title or a.name or "G"}" {{', "  rankdir=LR;", '  node [shape=circle];']
    for i in range(a.n_states):
        attrs = []
        if i in a.secret:
            attrs.append("shape=doublecircle")
        if i in a.marked:
            attrs.append('style=filled, fillcolor="gray80"')
        label = names[i].replace('"', '\\"')
        attrs.append(f'label="{label}"')
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    for i in sorted(a.initial):
        lines.append(f"  init{i} [shape=point]; init{i} -> n{i};")
    for x, k, y in zip(a.src.tolist(), a.ev.tolist(), a.dst.tolist()):
        label = "τ" if k < 0 else event_str(a.events[k])
        lines.append(f'  n{x} -> n{y} [label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
