"""Shipped fixture annotations: an insurance manual and a synthetic corpus.

Annotations are assembled through a span-tracking text builder so every
surface/span pair is correct by construction. Running this module as a
script regenerates the fixture files under fixtures/.
"""
from __future__ import annotations

import json
import random
from pathlib import Path


class TextBuilder:
    """Accumulates manual text while recording spans of annotated pieces."""

    def __init__(self):
        self._parts: list[str] = []
        self._len = 0

    def add(self, piece: str) -> dict:
        start = self._len
        self._parts.append(piece)
        self._len += len(piece)
        return {"surface": piece, "span": [start, start + len(piece)]}

    def skip(self, piece: str) -> None:
        self._parts.append(piece)
        self._len += len(piece)

    @property
    def text(self) -> str:
        return "".join(self._parts)


def _arg(mention: dict, role: str, **extra) -> dict:
    return {**mention, "role": role, **extra}


def insurance_annotation() -> dict:
    """The worked insurance-manual example used across tests and the docs."""
    tb = TextBuilder()
    user = tb.add("User")
    tb.skip(" guide for the insurance policy. ")

    first = tb.add("First,")
    tb.skip(" ")
    agree = tb.add("agree to")
    tb.skip(" ")
    terms = tb.add("the insurance terms")
    tb.skip(" ")
    on_interface = tb.add("on the application interface")
    tb.skip(", as terms ")
    not_accepted = tb.add("not accepted in time")
    tb.skip(" stop the signing. Then you can ")

    see = tb.add("see")
    tb.skip(" ")
    button = tb.add("the signing button")
    tb.skip(". ")

    finally_ = tb.add("Finally,")
    tb.skip(" ")
    sign = tb.add("sign")
    tb.skip(" ")
    policy = tb.add("the policy")
    tb.skip(" ")
    in_application = tb.add("in the insurance application")
    tb.skip(". The policy stays ")
    valid_for = tb.add("valid for one year")
    tb.skip(". Notice: only a ")

    rna_user = tb.add("real name authentication user")
    tb.skip(" ")
    participate = tb.add("can participate in the insurance")
    tb.skip(". A ")

    browser = tb.add("browser")
    tb.skip(" ")
    not_compatible = tb.add("not compatible with the signing tool")
    tb.skip(" may ")
    result_in = tb.add("result in")
    tb.skip(" ")
    failure = tb.add("signing failure")
    tb.skip(".")

    return {
        "manual_id": "insurance-policy",
        "text": tb.text,
        "entities": [
            {
                **user,
                "sub_entities": [
                    {**rna_user, "args": [_arg(participate, "state")]},
                    {
                        **browser,
                        "args": [
                            _arg(not_compatible, "state"),
                            _arg(
                                result_in,
                                "state",
                                pata_targets=["the signing button"],
                                arg_args=[_arg(failure, "other:effect")],
                            ),
                        ],
                    },
                ],
            },
            {**policy, "args": [_arg(valid_for, "other:duration")]},
        ],
        "procedures": [
            [
                {
                    **agree,
                    "patient": dict(terms),
                    "args": [
                        _arg(first, "manner"),
                        _arg(on_interface, "location"),
                        _arg(not_accepted, "state", pata_targets=["the policy"]),
                    ],
                },
                {**see, "patient": dict(button)},
                {
                    **sign,
                    "agent": "User",
                    "patient": "the policy",
                    "args": [_arg(finally_, "manner"), _arg(in_application, "location")],
                },
            ]
        ],
    }


VERBS = ["register", "submit", "review", "confirm", "activate", "renew",
         "upload", "verify", "download", "cancel", "restart", "unlock",
         "redeem", "extend"]
OBJECTS = ["the application form", "the service contract", "the account details",
           "the payment invoice", "the warranty card", "the order summary",
           "the identity document", "the renewal notice", "the claim report",
           "the delivery label", "the refund request", "the license key"]
TIMES = ["within 24 hours", "before the deadline", "during business hours",
         "after the payment", "before the insurance deadline", "within three days",
         "after the first login", "before midnight", "during the trial period",
         "after the review call"]
LOCATIONS = ["on the settings page", "at the service counter", "in the mobile app",
             "on the home screen", "on the application interface", "at the pickup point",
             "on the billing page", "in the desktop client", "on the orders tab",
             "at the front desk"]
MANNERS = ["First,", "Next,", "Then", "Later,", "Afterwards,", "Meanwhile,",
           "Eventually,", "Subsequently,", "In the end,", "Finally,"]
ENTITY_NOUNS = ["account", "membership", "coupon", "subscription", "wallet",
                "voucher", "gift card", "invoice history"]
STATES = ["not verified in time", "not compatible with the service",
          "expired before renewal", "locked after three attempts",
          "can participate in the insurance", "suspended for review",
          "missing a payment method"]
ACTION_STATES = ["not accepted in time", "not completed correctly",
                 "left unconfirmed", "skipped by mistake", "submitted twice",
                 "rejected by the reviewer", "missing a signature",
                 "filled in the wrong order", "saved without changes",
                 "cancelled halfway"]
PRODUCTS = ["the premium membership", "the delivery service", "the insurance add-on",
            "the trade-in program", "the cloud backup plan", "the loyalty card"]


def synthetic_manual(index: int, rng: random.Random) -> dict:
    """One templated manual: a procedure of argument-bearing steps plus
    stateful entities hanging off the default agent."""
    tb = TextBuilder()
    user = tb.add("User")
    tb.skip(" notes for ")
    product = tb.add(rng.choice(PRODUCTS))
    tb.skip(". ")

    n_actions = rng.choice([8, 9])
    verbs = rng.sample(VERBS, n_actions)
    failure_states = rng.sample(ACTION_STATES, n_actions)
    # the last step acts on the product itself; earlier steps draw objects
    object_surfaces = [rng.choice(OBJECTS) for _ in range(n_actions - 1)]
    object_surfaces.append(product["surface"])
    actions = []
    for i, verb in enumerate(verbs):
        manner_text = "Finally," if i == n_actions - 1 else MANNERS[i % 9]
        manner = tb.add(manner_text)
        tb.skip(" ")
        action = tb.add(verb)
        tb.skip(" ")
        obj = tb.add(object_surfaces[i])
        args = [_arg(manner, "manner")]
        use_time = rng.random() < 0.7
        use_location = rng.random() < 0.7 or not use_time
        if use_time:
            tb.skip(" ")
            args.append(_arg(tb.add(rng.choice(TIMES)), "time"))
        if use_location:
            tb.skip(" ")
            args.append(_arg(tb.add(rng.choice(LOCATIONS)), "location"))
        # every step carries a failure state that blocks the next step's
        # patient, so why-questions about a step have a prerequisite state
        # on the step before it to point back at
        blocked = object_surfaces[min(i + 1, n_actions - 1)]
        tb.skip(", unless ")
        args.append(_arg(tb.add(failure_states[i]), "state", pata_targets=[blocked]))
        tb.skip(". ")
        spec = {**action, "patient": dict(obj), "args": args}
        if i in (0, n_actions - 1):
            spec["agent"] = "User"
        actions.append(spec)

    sub_entities = []
    for noun in rng.sample(ENTITY_NOUNS, 4):
        tb.skip("The ")
        ent = tb.add(noun)
        tb.skip(" ")
        state = tb.add(rng.choice(STATES))
        affected = rng.choice(object_surfaces)
        tb.skip(f" may affect {affected}. ")
        sub_entities.append(
            {**ent, "args": [_arg(state, "state", pata_targets=[affected])]}
        )

    return {
        "manual_id": f"manual-{index:03d}",
        "text": tb.text,
        "entities": [{**user, "sub_entities": sub_entities}, {**product}],
        "procedures": [actions],
    }


def synthetic_corpus(count: int = 20, seed: int = 7) -> list[dict]:
    rng = random.Random(seed)
    return [synthetic_manual(i, rng) for i in range(count)]


def write_fixtures(root: str | Path = "fixtures", count: int = 20, seed: int = 7) -> list[Path]:
    """Regenerate the committed fixture annotation files."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    written = []

    path = root / "insurance.annotation.json"
    path.write_text(
        json.dumps(insurance_annotation(), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    written.append(path)

    corpus_dir = root / "corpus"
    corpus_dir.mkdir(exist_ok=True)
    for doc in synthetic_corpus(count, seed):
        p = corpus_dir / f"{doc['manual_id']}.annotation.json"
        p.write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")
        written.append(p)
    return written


if __name__ == "__main__":
    for p in write_fixtures():
        print(p)
