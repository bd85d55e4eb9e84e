"""CDCL SAT solver: two-watched literals, VSIDS, 1UIP learning, Luby restarts.

Literal encoding follows MiniSat: variable v (1-based) yields literals
``v << 1`` (positive) and ``v << 1 | 1`` (negative); negation is ``lit ^ 1``.
Assignments store 1 for true, 0 for false, 2 for unassigned, so an assigned
literal's value is ``assigns[lit >> 1] ^ (lit & 1)``.
"""

from __future__ import annotations

import heapq


class SatSolver:
    def __init__(self) -> None:
        self.nvars = 0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.watches: list[list[list[int]]] = [[], []]
        self.assigns: list[int] = [2]
        self.level: list[int] = [0]
        self.reason: list = [None]
        self.activity: list[float] = [0.0]
        self.polarity: list[int] = [0]
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.order: list[tuple[float, int]] = []
        self.var_inc = 1.0
        self.var_decay = 1.0 / 0.95
        self.ok = True
        self.conflicts = 0
        self.propagations = 0
        self._seen: list[int] = [0]
        # control tier: variables always decided before the rest (finite-domain
        # selectors such as function choices); decided in VSIDS order among
        # themselves
        self.is_control: list[int] = [0]
        self.control_order: list[tuple[float, int]] = []

    # -- variables / clauses ----------------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.assigns.append(2)
        self.level.append(0)
        self.reason.append(None)
        self.activity.append(0.0)
        self.polarity.append(0)
        self._seen.append(0)
        self.is_control.append(0)
        self.watches.append([])
        self.watches.append([])
        heapq.heappush(self.order, (0.0, v))
        return v

    def mark_control(self, v: int, phase: int = 1) -> None:
        """Put a variable in the always-decide-first tier.

        Ties resolve toward lower variable indices, so control variables get
        decided roughly in declaration (= unrolling) order.
        """
        if not self.is_control[v]:
            self.is_control[v] = 1
            self.polarity[v] = phase
            if self.activity[v] == 0.0:
                self.activity[v] = 1.0 / (1.0 + 1e-5 * v)
            heapq.heappush(self.control_order, (-self.activity[v], v))

    def add_clause(self, lits) -> bool:
        """Add a problem clause; returns False if the formula became unsat."""
        if not self.ok:
            return False
        if self.trail_lim:
            self.backtrack(0)
        assigns = self.assigns
        seen: set[int] = set()
        out: list[int] = []
        for lit in lits:
            if lit ^ 1 in seen:
                return True  # tautology
            if lit in seen:
                continue
            val = assigns[lit >> 1]
            if val != 2:
                if val ^ (lit & 1) == 1:
                    return True  # satisfied at level 0
                continue  # falsified at level 0: drop literal
            seen.add(lit)
            out.append(lit)
        if not out:
            self.ok = False
            return False
        if len(out) == 1:
            self._enqueue(out[0], None)
            if self.propagate() is not None:
                self.ok = False
                return False
            return True
        self.clauses.append(out)
        self._attach(out)
        return True

    def _attach(self, clause: list[int]) -> None:
        # watches[L] lists the clauses in which literal L is currently watched
        self.watches[clause[0]].append(clause)
        self.watches[clause[1]].append(clause)

    # -- assignment --------------------------------------------------------------

    def _enqueue(self, lit: int, reason) -> None:
        v = lit >> 1
        self.assigns[v] = 1 - (lit & 1)
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def value_lit(self, lit: int) -> int:
        val = self.assigns[lit >> 1]
        return val if val == 2 else val ^ (lit & 1)

    def propagate(self):
        """Unit propagation; returns the conflicting clause or None."""
        watches = self.watches
        assigns = self.assigns
        trail = self.trail
        level = self.level
        reason = self.reason
        props = 0
        while self.qhead < len(trail):
            p = trail[self.qhead]
            self.qhead += 1
            props += 1
            falsified = p ^ 1
            ws = watches[falsified]
            i = 0
            j = 0
            n = len(ws)
            cur_level = len(self.trail_lim)
            while i < n:
                clause = ws[i]
                i += 1
                if clause[0] == falsified:
                    clause[0] = clause[1]
                    clause[1] = falsified
                first = clause[0]
                v0 = assigns[first >> 1]
                if v0 != 2 and v0 ^ (first & 1) == 1:
                    ws[j] = clause
                    j += 1
                    continue
                found = False
                k = 2
                cn = len(clause)
                while k < cn:
                    lk = clause[k]
                    vk = assigns[lk >> 1]
                    if vk == 2 or vk ^ (lk & 1) == 1:
                        clause[1] = lk
                        clause[k] = falsified
                        watches[lk].append(clause)
                        found = True
                        break
                    k += 1
                if found:
                    continue
                ws[j] = clause
                j += 1
                if v0 != 2:
                    # conflict: keep the unprocessed tail of the watch list
                    while i < n:
                        ws[j] = ws[i]
                        j += 1
                        i += 1
                    del ws[j:]
                    self.qhead = len(trail)
                    self.propagations += props
                    return clause
                # inlined enqueue
                fv = first >> 1
                assigns[fv] = 1 - (first & 1)
                level[fv] = cur_level
                reason[fv] = clause
                trail.append(first)
            del ws[j:]
        self.propagations += props
        return None

    # -- conflict analysis -----------------------------------------------------------

    def boost_var(self, v: int, amount: float) -> None:
        """Raise a variable's initial branching priority."""
        self.activity[v] += amount * self.var_inc
        heapq.heappush(self.order, (-self.activity[v], v))

    def _bump(self, v: int) -> None:
        act = self.activity[v] + self.var_inc
        self.activity[v] = act
        if act > 1e100:
            for u in range(1, self.nvars + 1):
                self.activity[u] *= 1e-100
            self.var_inc *= 1e-100
            act = self.activity[v]
        if self.is_control[v]:
            heapq.heappush(self.control_order, (-act, v))
        else:
            heapq.heappush(self.order, (-act, v))

    def analyze(self, conflict: list[int]) -> tuple[list[int], int]:
        """1UIP learned clause (asserting literal first) and backjump level."""
        seen = self._seen
        touched: list[int] = []
        learnt: list[int] = [0]
        counter = 0
        p = -1
        index = len(self.trail) - 1
        cur_level = len(self.trail_lim)
        reason_side = conflict
        while True:
            for q in reason_side:
                if p != -1 and (q >> 1) == (p >> 1):
                    continue  # the literal this reason clause propagated
                v = q >> 1
                if not seen[v] and self.level[v] > 0:
                    seen[v] = 1
                    touched.append(v)
                    self._bump(v)
                    if self.level[v] >= cur_level:
                        counter += 1
                    else:
                        learnt.append(q)
            while True:
                p = self.trail[index]
                index -= 1
                if seen[p >> 1]:
                    break
            counter -= 1
            seen[p >> 1] = 0
            if counter == 0:
                break
            reason_side = self.reason[p >> 1]
        learnt[0] = p ^ 1

        # non-recursive minimization: a literal is redundant if its reason is
        # covered by the remaining learnt variables (or level-0 facts)
        marked = {q >> 1 for q in learnt}
        minimized = [learnt[0]]
        for q in learnt[1:]:
            reason = self.reason[q >> 1]
            if reason is not None and all(
                (r >> 1) in marked or self.level[r >> 1] == 0 for r in reason
            ):
                continue
            minimized.append(q)
        learnt = minimized

        for v in touched:
            seen[v] = 0

        if len(learnt) == 1:
            back_level = 0
        else:
            max_i = 1
            max_level = self.level[learnt[1] >> 1]
            for i in range(2, len(learnt)):
                li = self.level[learnt[i] >> 1]
                if li > max_level:
                    max_level = li
                    max_i = i
            learnt[1], learnt[max_i] = learnt[max_i], learnt[1]
            back_level = max_level
        return learnt, back_level

    def backtrack(self, target_level: int) -> None:
        if len(self.trail_lim) <= target_level:
            return
        bound = self.trail_lim[target_level]
        assigns = self.assigns
        polarity = self.polarity
        activity = self.activity
        order = self.order
        control_order = self.control_order
        is_control = self.is_control
        for i in range(len(self.trail) - 1, bound - 1, -1):
            lit = self.trail[i]
            v = lit >> 1
            polarity[v] = assigns[v]
            assigns[v] = 2
            self.reason[v] = None
            if is_control[v]:
                heapq.heappush(control_order, (-activity[v], v))
            else:
                heapq.heappush(order, (-activity[v], v))
        del self.trail[bound:]
        del self.trail_lim[target_level:]
        self.qhead = bound

    # -- search -----------------------------------------------------------------------

    def _pick_branch_var(self) -> int:
        assigns = self.assigns
        activity = self.activity
        corder = self.control_order
        while corder:
            act, v = heapq.heappop(corder)
            if assigns[v] == 2 and -act == activity[v]:
                return v
        order = self.order
        while order:
            act, v = heapq.heappop(order)
            if assigns[v] == 2 and -act == activity[v]:
                return v
        for v in range(1, self.nvars + 1):
            if assigns[v] == 2:
                return v
        return 0

    def _reduce_db(self) -> None:
        keep_reasons = {id(self.reason[lit >> 1]) for lit in self.trail
                        if self.reason[lit >> 1] is not None}
        self.learnts.sort(key=len)
        keep = len(self.learnts) // 2
        removed: set[int] = set()
        retained: list[list[int]] = []
        for i, c in enumerate(self.learnts):
            if i < keep or len(c) <= 2 or id(c) in keep_reasons:
                retained.append(c)
            else:
                removed.add(id(c))
        if not removed:
            return
        self.learnts = retained
        for wl in range(2, 2 * self.nvars + 2):
            ws = self.watches[wl]
            if ws:
                self.watches[wl] = [c for c in ws if id(c) not in removed]

    def solve(self, assumptions=()) -> bool:
        """Satisfiability under assumptions; model kept on True."""
        if not self.ok:
            return False
        self.backtrack(0)
        if self.propagate() is not None:
            self.ok = False
            return False
        n_assumed = len(assumptions)
        luby_index = 0
        budget = _luby(luby_index) * 256
        local_conflicts = 0
        max_learnts = max(4000, len(self.clauses) // 3)

        while True:
            conflict = self.propagate()
            if conflict is not None:
                self.conflicts += 1
                local_conflicts += 1
                if len(self.trail_lim) <= n_assumed:
                    self.backtrack(0)
                    if n_assumed == 0:
                        self.ok = False
                    return False
                learnt, back_level = self.analyze(conflict)
                if len(learnt) == 1:
                    self.backtrack(0)
                    val = self.value_lit(learnt[0])
                    if val == 0:
                        self.ok = False
                        return False
                    if val == 2:
                        self._enqueue(learnt[0], None)
                else:
                    self.backtrack(back_level)
                    self.learnts.append(learnt)
                    self._attach(learnt)
                    if self.value_lit(learnt[0]) == 2:
                        self._enqueue(learnt[0], learnt)
                self.var_inc *= self.var_decay
                continue

            if local_conflicts >= budget:
                local_conflicts = 0
                luby_index += 1
                budget = _luby(luby_index) * 256
                self.backtrack(0)
                continue

            if len(self.learnts) > max_learnts:
                self._reduce_db()
                max_learnts = int(max_learnts * 1.3)

            # establish pending assumptions, one pseudo-decision level each
            decision = 0
            while len(self.trail_lim) < n_assumed:
                a = assumptions[len(self.trail_lim)]
                val = self.value_lit(a)
                if val == 1:
                    self.trail_lim.append(len(self.trail))
                    continue
                if val == 0:
                    self.backtrack(0)
                    return False
                decision = a
                break
            if decision == 0:
                v = self._pick_branch_var()
                if v == 0:
                    return True
                decision = (v << 1) if self.polarity[v] == 1 else ((v << 1) | 1)
            self.trail_lim.append(len(self.trail))
            self._enqueue(decision, None)

    def model(self) -> list[int]:
        return list(self.assigns)


def _luby(i: int) -> int:
    """Luby restart sequence 1,1,2,1,1,2,4,... (i is 0-based)."""
    i += 1
    while True:
        k = i.bit_length()
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
