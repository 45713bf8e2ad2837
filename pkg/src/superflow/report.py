"""Check results and machine-readable reports."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float | None = None
    witness: str | None = None

    def as_dict(self):
        d = {"name": self.name, "pass": self.passed}
        d["residual"] = self.residual
        d["witness"] = self.witness
        return d


@dataclass
class Report:
    title: str
    checks: list = field(default_factory=list)
    verdict: str | None = None
    rule: str | None = None
    config: dict = field(default_factory=dict)

    def add(self, name, passed, residual=None, witness=None):
        self.checks.append(CheckResult(name, bool(passed), residual, witness))

    def extend(self, other: "Report"):
        self.checks.extend(other.checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def first_failure(self):
        for c in self.checks:
            if not c.passed:
                return c
        return None

    def as_dict(self):
        d = {
            "command": self.title,
            "status": "pass" if self.passed else "fail",
            "checks": [c.as_dict() for c in self.checks],
            "config": self.config,
        }
        if self.verdict is not None:
            d["verdict"] = self.verdict
            d["rule"] = self.rule
        return d

    def render_text(self):
        lines = [f"== {self.title} =="]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            extra = ""
            if c.residual is not None:
                extra += f"  residual={c.residual:.3e}"
            if c.witness:
                extra += f"  witness: {c.witness}"
            lines.append(f"  [{status}] {c.name}{extra}")
        if self.verdict is not None:
            lines.append(f"  verdict: {self.verdict} ({self.rule})")
        return "\n".join(lines)
