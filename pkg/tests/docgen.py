"""Random valid LAPIS documents for round-trip testing."""

from __future__ import annotations

import random
import string

from lapis.model import (
    METHODS,
    MODIFIERS,
    PERIODS,
    SCALARS,
    Array,
    AuthSpec,
    Branch,
    EnumBody,
    ErrorDef,
    ErrorSection,
    Field,
    Flow,
    LapisDocument,
    LimitsSection,
    Map,
    Meta,
    Named,
    ObjectBody,
    OnExceed,
    Operation,
    Param,
    Plan,
    RateSpec,
    Scalar,
    Seq,
    Step,
    TypeDef,
    Wait,
    Webhook,
)

# prose alphabet: includes the characters the grammar gives meaning to
_PROSE = string.ascii_letters + string.digits + " .,:;'\"#@~!?<>|*-=/()[]{}\\é✓"
_WORDS = ["alpha", "beta", "gamma", "delta", "item", "user", "order", "page", "id", "value", "x"]


class DocGen:
    def __init__(self, seed: int) -> None:
        self.r = random.Random(seed)
        self.used: set[str] = set()

    def ident(self, upper: bool = False) -> str:
        r = self.r
        while True:
            parts = r.sample(_WORDS, r.randint(1, 2))
            name = "".join(p.title() for p in parts) if upper else "_".join(parts)
            if r.random() < 0.2:
                name += str(r.randint(0, 99))
            if name not in self.used and name not in SCALARS:
                self.used.add(name)
                return name

    def prose(self) -> str:
        r = self.r
        text = "".join(r.choice(_PROSE) for _ in range(r.randint(1, 40))).strip()
        return text or "text"

    def token(self) -> str:
        return "".join(self.r.choice(string.ascii_letters + string.digits + "-_.") for _ in range(self.r.randint(1, 12)))

    def type_expr(self, names: list[str], depth: int = 0) -> object:
        r = self.r
        roll = r.random()
        if depth < 2 and roll < 0.15:
            return Array(self.type_expr(names, depth + 1))
        if depth < 2 and roll < 0.25:
            return Map(self.type_expr(names, depth + 1))
        if names and roll < 0.45:
            return Named(r.choice(names))
        return Scalar(r.choice(SCALARS))

    def default_for(self, t: object, enums: dict[str, tuple[str, ...]]) -> object:
        r = self.r
        if isinstance(t, Named):
            return r.choice(enums[t.name]) if t.name in enums else None
        if not isinstance(t, Scalar) or r.random() < 0.6:
            return None
        kind = t.name
        if kind == "bool":
            return r.random() < 0.5
        if kind == "int":
            return r.randint(-10**6, 10**6)
        if kind == "float":
            return r.choice([0.5, -3.25, 1e-7, 12345.678, float(r.randint(0, 9))])
        if kind in ("str", "date", "datetime", "any"):
            return r.choice([self.prose(), self.token(), "true", "12", ""])
        return None

    def field(self, names: list[str], enums: dict, taken: set[str]) -> Field:
        r = self.r
        name = self.ident()
        taken.add(name)
        t = self.type_expr(names)
        return Field(
            name,
            t,
            optional=r.random() < 0.4,
            default=self.default_for(t, enums),
            since=r.choice([None, None, "2.1", "v3"]),
            deprecated=r.choice([None, None, None, "", self.prose()]),
        )

    def fields(self, names: list[str], enums: dict, lo: int = 1, hi: int = 4) -> tuple[Field, ...]:
        taken: set[str] = set()
        return tuple(self.field(names, enums, taken) for _ in range(self.r.randint(lo, hi)))

    def document(self) -> LapisDocument:
        r = self.r
        type_names = [self.ident(upper=True) for _ in range(r.randint(0, 4))]
        enums: dict[str, tuple[str, ...]] = {}
        types = []
        for name in type_names:
            if r.random() < 0.3:
                variants = tuple(dict.fromkeys(self.token() for _ in range(r.randint(1, 4))))
                enums[name] = variants
                types.append(TypeDef(name, EnumBody(variants)))
            else:
                types.append(TypeDef(name, ObjectBody(self.fields(type_names, enums))))

        ops = []
        for _ in range(r.randint(1, 5)):
            method = r.choice(METHODS)
            segs = [self.ident() for _ in range(r.randint(1, 3))]
            pnames = [s for s in segs if r.random() < 0.4]
            path = "/" + "/".join(f"{{{s}}}" if s in pnames else s for s in segs)
            inputs = [Param(p, Scalar(r.choice(["str", "int"])), location="path") for p in pnames]
            for _ in range(r.randint(0, 3)):
                loc = r.choice(["query", "body", "header"])
                name = self.ident()
                t = self.type_expr(type_names)
                default_loc = "body" if method in ("POST", "PUT", "PATCH") else "query"
                explicit = loc != default_loc or r.random() < 0.2
                alias = self.token() if explicit and loc == "header" and r.random() < 0.5 else None
                inputs.append(
                    Param(name, t, r.random() < 0.5, self.default_for(t, enums), loc, explicit, alias)
                )
            r.shuffle(inputs)
            roll = r.random()
            if roll < 0.3:
                output = None
            elif roll < 0.6:
                output = ObjectBody(self.fields(type_names, enums))
            else:
                output = self.type_expr(type_names)
            ops.append(
                Operation(
                    self.ident(),
                    method,
                    path,
                    tuple(self.prose() for _ in range(r.randint(0, 2))),
                    tuple(inputs),
                    output,
                    frozenset(m for m in MODIFIERS if r.random() < 0.2),
                )
            )

        webhooks = []
        for _ in range(r.randint(0, 2)):
            payload = []
            for _ in range(r.randint(0, 3)):
                loc = r.choice(["body", "header"])
                alias = self.token() if loc == "header" and r.random() < 0.5 else None
                payload.append(Param(self.ident(), self.type_expr(type_names), r.random() < 0.3,
                                     None, loc, loc == "header", alias))
            webhooks.append(
                Webhook(self.ident(), r.choice(["POST", "PUT"]), "/" + self.ident(), self.prose(), tuple(payload))
            )

        errors = None
        if r.random() < 0.7:
            entries = []
            seen = set()
            for _ in range(r.randint(1, 4)):
                code, label = r.randint(400, 599), self.ident()
                if (code, label) in seen:
                    continue
                seen.add((code, label))
                bound = tuple(r.sample([o.name for o in ops], r.randint(1, len(ops)))) if r.random() < 0.4 else None
                entries.append(
                    ErrorDef(code, label, tuple(self.prose() for _ in range(r.randint(0, 2))), bound,
                             self.fields(type_names, enums, 0, 2))
                )
            objects = [t.name for t in types if isinstance(t.body, ObjectBody)]
            base = r.choice(objects) if objects and r.random() < 0.5 else None
            errors = ErrorSection(base, tuple(entries))

        limits = None
        if r.random() < 0.5:
            plans = []
            for _ in range(r.randint(0, 2)):
                def rate() -> RateSpec:
                    return RateSpec(r.randint(1, 10**5), r.choice(PERIODS), r.choice([None, "key", "ip"]),
                                    r.choice([None, self.prose()]))
                plans.append(Plan(self.ident(), tuple(rate() for _ in range(r.randint(0, 2))),
                                  tuple(rate() for _ in range(r.randint(0, 2)))))
            on_exceed = OnExceed(429, "retry_after") if r.random() < 0.7 else None
            # an empty section is not written, so it reads back as absent
            limits = LimitsSection(on_exceed, tuple(plans)) if plans or on_exceed else None

        flows = []
        steps = [o.name for o in ops] + [w.name for w in webhooks]
        for _ in range(r.randint(0, 2)):
            def step() -> Step:
                return Step(r.choice(steps), r.random() < 0.3)

            items = []
            for _ in range(r.randint(2, 7)):
                roll = r.random()
                if roll < 0.15:
                    label = self.prose().translate(str.maketrans("", "", "()#")).strip()
                    items.append(Wait(label or "wait"))
                elif roll < 0.35:
                    items.append(Branch(tuple(step() for _ in range(r.randint(2, 3)))))
                else:
                    items.append(step())
            expr = Seq(tuple(items))
            used = sorted({s.name for s in _steps(expr)})
            conds = tuple((n, self.prose()) for n in used if r.random() < 0.3)
            flows.append(Flow(self.ident(), expr, r.choice([None, self.prose()]), conds))

        meta = Meta(
            self.prose(),
            r.choice(["https://api.example.com", "http://localhost:8080/v1", "https://x.io/a/b"]),
            r.choice([AuthSpec(), AuthSpec("bearer", "header", "Authorization"), AuthSpec("apikey", "query", "api_key"),
                      AuthSpec("basic"), AuthSpec("oauth2")]),
            r.choice([None, self.token()]),
            r.choice([None, self.prose()]),
        )
        return LapisDocument(meta, tuple(types), tuple(ops), tuple(webhooks), errors, limits, tuple(flows))


def _steps(expr: object):
    if isinstance(expr, Step):
        yield expr
    elif isinstance(expr, (Seq, Branch)):
        for item in expr.items if isinstance(expr, Seq) else expr.alternatives:
            yield from _steps(item)


def random_document(seed: int) -> LapisDocument:
    return DocGen(seed).document()
