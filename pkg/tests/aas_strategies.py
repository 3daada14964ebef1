"""Hypothesis strategies for valid AAS documents."""

from hypothesis import strategies as st

from aasmatch.aas import AASDocument, Shell, Submodel, SubmodelElement

_name = st.text(st.characters(min_codepoint=33, max_codepoint=0x24F, blacklist_characters="\\"), min_size=1, max_size=10)
_values = {
    "string": st.text(max_size=10),
    "integer": st.integers(-10**6, 10**6).map(str),
    "decimal": st.decimals(-1000, 1000, places=3, allow_nan=False, allow_infinity=False).map(str),
    "boolean": st.sampled_from(["true", "false"]),
}


@st.composite
def elements(draw):
    vt = draw(st.sampled_from(sorted(_values)))
    value = draw(st.none() | _values[vt])
    sem = draw(st.none() | st.sampled_from(["urn:c:a", "urn:c:b", "0173-1#02-AAO677#002"]))
    return SubmodelElement(draw(_name), vt, sem, value)


@st.composite
def documents(draw, max_shells=2):
    n_shells = draw(st.integers(1, max_shells))
    ids = draw(st.lists(_name, min_size=n_shells + 3, max_size=n_shells + 3, unique=True))
    shell_ids, pool = ids[:n_shells], ids[n_shells:]
    submodels = []
    for j, sm_id in enumerate(draw(st.lists(st.sampled_from(pool), max_size=3, unique=True))):
        els = draw(st.lists(elements(), max_size=4, unique_by=lambda e: e.id_short))
        sem = draw(st.none() | st.just(f"urn:sm:{j}"))
        submodels.append(Submodel(sm_id, f"SM{j}", sem, tuple(els)))
    shells = []
    for sid in shell_ids:
        refs = draw(st.lists(st.sampled_from([s.id for s in submodels]), unique=True)) if submodels else []
        shells.append(Shell(sid, "shell " + sid, draw(st.sampled_from(["Instance", "Type"])), tuple(refs)))
    return AASDocument(tuple(shells), tuple(submodels))
