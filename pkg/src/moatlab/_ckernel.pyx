# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled event kernel.

Same contract as ``_pykernel``: exact rational event simulation of the
moat growth with at most 64 terminals.  Rationals are reduced int64
pairs; every operation goes through 128-bit intermediates and sets a
flag if a result no longer fits, which surfaces as ``OverflowError``.
"""

from libc.stdint cimport int32_t, int64_t, uint64_t
from libc.stdlib cimport malloc, calloc, free
from libcpp.vector cimport vector
from libcpp.queue cimport priority_queue
from libcpp.utility cimport pair

import numpy as np
from fractions import Fraction

cdef extern from *:
    """
    #include <stdint.h>
    typedef struct { int64_t n; int64_t d; } Q;
    static int q_overflow = 0;

    static inline int ctz128(unsigned __int128 x) {
        uint64_t lo = (uint64_t)x;
        return lo ? __builtin_ctzll(lo) : 64 + __builtin_ctzll((uint64_t)(x >> 64));
    }
    static inline uint64_t gcd64(uint64_t a, uint64_t b) {
        if (!a) return b;
        if (!b) return a;
        int sh = __builtin_ctzll(a | b);
        a >>= __builtin_ctzll(a);
        do {
            b >>= __builtin_ctzll(b);
            if (a > b) { uint64_t t = a; a = b; b = t; }
            b -= a;
        } while (b);
        return a << sh;
    }
    static inline unsigned __int128 gcd128(unsigned __int128 a, unsigned __int128 b) {
        if (!(a >> 64) && !(b >> 64)) return gcd64((uint64_t)a, (uint64_t)b);
        if (!a) return b;
        if (!b) return a;
        int sh = ctz128(a | b);
        a >>= ctz128(a);
        do {
            b >>= ctz128(b);
            if (a > b) { unsigned __int128 t = a; a = b; b = t; }
            b -= a;
        } while (b);
        return a << sh;
    }
    static inline Q q_make(__int128 n, __int128 d) {
        Q r;
        if (d < 0) { n = -n; d = -d; }
        unsigned __int128 an = n < 0 ? (unsigned __int128)(-n) : (unsigned __int128)n;
        /* small values stay unreduced; comparisons cross-multiply anyway */
        if (d <= ((__int128)1 << 28) && an <= ((unsigned __int128)1 << 40)) {
            r.n = (int64_t)n; r.d = (int64_t)d;
            return r;
        }
        unsigned __int128 g = gcd128(an, (unsigned __int128)d);
        if (g > 1) { n /= (__int128)g; d /= (__int128)g; }
        if (n > INT64_MAX || n < -INT64_MAX || d > INT64_MAX) { q_overflow = 1; r.n = 0; r.d = 1; return r; }
        r.n = (int64_t)n; r.d = (int64_t)d;
        return r;
    }
    static inline Q q_int(int64_t n) { Q r; r.n = n; r.d = 1; return r; }
    static inline Q q_add(Q a, Q b) {
        if (a.d == b.d) return q_make((__int128)a.n + b.n, a.d);
        return q_make((__int128)a.n * b.d + (__int128)b.n * a.d, (__int128)a.d * b.d);
    }
    static inline Q q_sub(Q a, Q b) {
        if (a.d == b.d) return q_make((__int128)a.n - b.n, a.d);
        return q_make((__int128)a.n * b.d - (__int128)b.n * a.d, (__int128)a.d * b.d);
    }
    static inline Q q_mulint(Q a, int64_t k) { return q_make((__int128)a.n * k, a.d); }
    static inline Q q_divint(Q a, int64_t k) { return q_make(a.n, (__int128)a.d * k); }
    static inline int q_cmp(Q a, Q b) {
        if (a.d == b.d) return (a.n > b.n) - (a.n < b.n);
        __int128 x = (__int128)a.n * b.d, y = (__int128)b.n * a.d;
        return (x > y) - (x < y);
    }
    static inline int q_eq(Q a, Q b) {
        if (a.d == b.d) return a.n == b.n;
        return (__int128)a.n * b.d == (__int128)b.n * a.d;
    }
    static inline Q q_reduce(Q a) {
        unsigned __int128 an = a.n < 0 ? (unsigned __int128)(-(__int128)a.n) : (unsigned __int128)a.n;
        uint64_t g = (uint64_t)gcd128(an, (unsigned __int128)a.d);
        if (g > 1) { a.n /= (int64_t)g; a.d /= (int64_t)g; }
        return a;
    }
    #include <map>
    #include <vector>
    #include <algorithm>
    /* event queue: exact time -> items, invalidated lazily */
    struct QLess { bool operator()(const Q& a, const Q& b) const { return q_cmp(a, b) < 0; } };
    struct Bucket { size_t off; std::vector<int32_t> items; Bucket() : off(0) {} };
    struct BQ {
        std::map<Q, Bucket, QLess> m;
        std::vector<Q> key;
        std::vector<unsigned char> live;
    };
    static BQ* bq_new(int32_t n) {
        BQ* b = new BQ();
        b->key.resize(n > 0 ? n : 1);
        b->live.assign(n > 0 ? n : 1, 0);
        return b;
    }
    static void bq_free(BQ* b) { delete b; }
    static void bq_set(BQ* b, int32_t item, Q k) {
        if (b->live[item] && q_eq(b->key[item], k)) return;
        b->live[item] = 1;
        b->key[item] = k;
        b->m[k].items.push_back(item);
    }
    static void bq_remove(BQ* b, int32_t item) { b->live[item] = 0; }
    static int bq_top(BQ* b, Q* out) {
        while (!b->m.empty()) {
            std::map<Q, Bucket, QLess>::iterator it = b->m.begin();
            Bucket& bk = it->second;
            while (bk.off < bk.items.size()) {
                int32_t x = bk.items[bk.off];
                if (b->live[x] && q_eq(b->key[x], it->first)) { *out = it->first; return 1; }
                bk.off++;
            }
            b->m.erase(it);
        }
        return 0;
    }
    /* pop every live item of the earliest bucket, in item order */
    static void bq_pop_batch(BQ* b, std::vector<int32_t>* out) {
        std::map<Q, Bucket, QLess>::iterator it = b->m.begin();
        Bucket& bk = it->second;
        Q k = it->first;
        for (size_t i = bk.off; i < bk.items.size(); i++) {
            int32_t x = bk.items[i];
            if (b->live[x] && q_eq(b->key[x], k)) { b->live[x] = 0; out->push_back(x); }
        }
        b->m.erase(it);
        std::sort(out->begin(), out->end());
    }
    static inline int popc(uint64_t x) { return __builtin_popcountll(x); }
    static inline int ctz64(uint64_t x) { return __builtin_ctzll(x); }
    """
    ctypedef struct Q:
        int64_t n
        int64_t d
    int q_overflow
    Q q_make(long long n, long long d) nogil
    Q q_int(int64_t n) nogil
    Q q_add(Q a, Q b) nogil
    Q q_sub(Q a, Q b) nogil
    Q q_mulint(Q a, int64_t k) nogil
    Q q_divint(Q a, int64_t k) nogil
    int q_cmp(Q a, Q b) nogil
    int q_eq(Q a, Q b) nogil
    Q q_reduce(Q a) nogil
    ctypedef struct BQ:
        pass
    BQ* bq_new(int32_t n) nogil
    void bq_free(BQ* b) nogil
    void bq_set(BQ* b, int32_t item, Q k) nogil
    void bq_remove(BQ* b, int32_t item) nogil
    int bq_top(BQ* b, Q* out) nogil
    void bq_pop_batch(BQ* b, vector[int32_t]* out) nogil
    int popc(uint64_t x) nogil
    int ctz64(uint64_t x) nogil


cdef struct ReachRec:
    int32_t v
    Q t
    uint64_t bits

cdef struct BpRec:
    int32_t e
    Q t
    Q load
    uint64_t cm

cdef struct UtRec:
    int32_t k
    Q t
    Q lf
    Q lb


cdef inline object qf(Q q):
    q = q_reduce(q)
    return Fraction(q.n, q.d)


cdef class _Run:
    cdef int n, m, M2, NI, K, rootv
    cdef bint continuous, record
    cdef const int32_t[::1] tail, head, out_ptr, out_edges, in_ptr, in_edges
    cdef Q *cost
    cdef uint64_t *T
    cdef uint64_t *HM
    cdef int32_t *rate
    cdef Q *tau
    cdef Q *tight
    cdef uint64_t *cm
    cdef Q *ut
    cdef int32_t *stamp
    cdef int32_t cur_stamp
    cdef uint64_t repmask
    cdef uint64_t pm_of[64]
    cdef int32_t rep[64]
    # indexed heap
    cdef BQ *bq
    cdef vector[int32_t] reached
    cdef vector[int32_t] changed
    cdef vector[int32_t] work
    cdef vector[int32_t] loading
    cdef unsigned char *inload
    cdef vector[ReachRec] reach_log
    cdef vector[ReachRec] root_log
    cdef vector[BpRec] bp_log
    cdef vector[UtRec] ut_log
    cdef long events

    def __dealloc__(self):
        free(self.cost); free(self.T); free(self.HM); free(self.rate)
        free(self.tau); free(self.tight); free(self.cm); free(self.ut)
        free(self.stamp); free(self.inload)
        if self.bq != NULL:
            bq_free(self.bq)

    # event queue

    cdef inline void hset(self, int32_t item, Q key) noexcept nogil:
        bq_set(self.bq, item, key)

    cdef inline void hremove(self, int32_t item) noexcept nogil:
        bq_remove(self.bq, item)

    # dynamics

    cdef inline Q load(self, int32_t e, Q t) noexcept nogil:
        if self.tight[e].d != 0:
            return self.cost[e >> 1]
        if self.rate[e] > 0:
            return q_sub(self.cost[e >> 1], q_mulint(q_sub(self.tau[e], t), self.rate[e]))
        return self.tau[e]

    cdef void mark_ut(self, int32_t k, Q t) noexcept nogil:
        cdef UtRec r
        self.ut[k] = t
        self.hremove(self.M2 + k)
        if self.record:
            r.k = k
            r.t = t
            r.lf = self.load(2 * k, t)
            r.lb = self.load(2 * k + 1, t)
            self.ut_log.push_back(r)

    cdef void update_ut(self, int32_t k, Q t) noexcept nogil:
        cdef Q c, lsum
        cdef int r
        if self.ut[k].d != 0:
            return
        c = self.cost[k]
        lsum = q_add(self.load(2 * k, t), self.load(2 * k + 1, t))
        r = self.rate[2 * k] + self.rate[2 * k + 1]
        if q_cmp(lsum, c) >= 0:
            self.hset(self.M2 + k, t)
        elif r > 0:
            self.hset(self.M2 + k, q_add(t, q_divint(q_sub(c, lsum), r)))
        else:
            self.hremove(self.M2 + k)

    cdef void refresh(self, int32_t e, Q t) noexcept nogil:
        cdef int32_t v, w
        cdef uint64_t new_cm
        cdef int new_rate
        cdef Q L, c
        cdef BpRec b
        if self.tight[e].d != 0:
            return
        v = self.tail[e]
        w = self.head[e]
        if self.continuous and self.ut[e >> 1].d == 0:
            new_cm = self.HM[v]
        else:
            new_cm = self.HM[v] & ~self.HM[w]
        new_rate = popc(new_cm & self.repmask)
        if new_cm and not self.inload[e]:
            self.inload[e] = 1
            self.loading.push_back(e)
        if new_cm == self.cm[e] and new_rate == self.rate[e]:
            return
        L = self.load(e, t)
        if self.record:
            b.e = e
            b.t = t
            b.load = L
            b.cm = new_cm
            self.bp_log.push_back(b)
        self.cm[e] = new_cm
        c = self.cost[e >> 1]
        if new_rate > 0:
            if new_rate != self.rate[e]:
                self.tau[e] = q_add(t, q_divint(q_sub(c, L), new_rate))
                self.rate[e] = new_rate
                self.hset(e, self.tau[e])
        else:
            self.rate[e] = 0
            self.tau[e] = L
            if q_eq(L, c):
                self.hset(e, t)
            else:
                self.hremove(e)
        if self.continuous:
            self.update_ut(e >> 1, t)

    cdef void refresh_vertex(self, int32_t x, Q t) noexcept nogil:
        cdef int p
        for p in range(self.out_ptr[x], self.out_ptr[x + 1]):
            self.refresh(self.out_edges[p], t)
        for p in range(self.in_ptr[x], self.in_ptr[x + 1]):
            self.refresh(self.in_edges[p], t)

    cdef inline uint64_t hit(self, uint64_t bits) noexcept nogil:
        cdef uint64_t h = 0
        while bits:
            h |= self.pm_of[ctz64(bits)]
            bits &= bits - 1
        return h

    cdef int find(self, int a) noexcept nogil:
        while self.rep[a] != a:
            self.rep[a] = self.rep[self.rep[a]]
            a = self.rep[a]
        return a

    cdef void touch(self, int32_t x) noexcept nogil:
        if self.stamp[x] != self.cur_stamp:
            self.stamp[x] = self.cur_stamp
            self.changed.push_back(x)

    cdef void propagate(self, int32_t start, Q t) noexcept nogil:
        cdef int32_t x, y, f
        cdef uint64_t new
        cdef int p
        cdef ReachRec r
        self.work.clear()
        self.work.push_back(start)
        while self.work.size():
            x = self.work.back()
            self.work.pop_back()
            for p in range(self.out_ptr[x], self.out_ptr[x + 1]):
                f = self.out_edges[p]
                if self.tight[f].d == 0:
                    continue
                y = self.head[f]
                new = self.T[x] & ~self.T[y]
                if not new:
                    continue
                self.set_reach(y, new, t)
                self.work.push_back(y)

    cdef void set_reach(self, int32_t y, uint64_t new, Q t) noexcept nogil:
        cdef ReachRec r
        if self.T[y] == 0:
            self.reached.push_back(y)
        self.T[y] |= new
        self.touch(y)
        if self.record:
            r.v = y
            r.t = t
            r.bits = new
            self.reach_log.push_back(r)
        if y == self.rootv:
            r.v = y
            r.t = t
            r.bits = new
            self.root_log.push_back(r)


def grow(g, merges, bint continuous=False, bint record=False, int root=0, bint root_stop=False):
    cdef _Run s = _Run.__new__(_Run)
    cdef int i, k, K, nmerge, mi, parts, lo, hi, ra, rb
    cdef int32_t e, item, x, v, w
    cdef Q t, nm, c, top
    cdef uint64_t new, big, full
    cdef bint stopped = False
    cdef size_t j, kept
    cdef ReachRec rr
    cdef BpRec bp
    cdef vector[int32_t] batch
    cdef const int32_t[::1] tvert = g.tvert
    cdef const int64_t[::1] cnum = g.cnum
    cdef const int64_t[::1] cden = g.cden

    K = tvert.shape[0]
    if K > 64:
        raise ValueError("compiled kernel supports at most 64 terminals")
    s.n = g.n
    s.m = g.m
    s.M2 = 2 * s.m
    s.NI = s.M2 + (s.m if continuous else 0)
    s.K = K
    s.continuous = continuous
    s.record = record
    s.tail = g.tail
    s.head = g.head
    s.out_ptr = g.out_ptr
    s.out_edges = g.out_edges
    s.in_ptr = g.in_ptr
    s.in_edges = g.in_edges
    s.rootv = tvert[root]
    s.cost = <Q *> malloc(max(s.m, 1) * sizeof(Q))
    s.T = <uint64_t *> calloc(max(s.n, 1), sizeof(uint64_t))
    s.HM = <uint64_t *> calloc(max(s.n, 1), sizeof(uint64_t))
    s.rate = <int32_t *> calloc(max(s.M2, 1), sizeof(int32_t))
    s.tau = <Q *> calloc(max(s.M2, 1), sizeof(Q))
    s.tight = <Q *> calloc(max(s.M2, 1), sizeof(Q))
    s.cm = <uint64_t *> calloc(max(s.M2, 1), sizeof(uint64_t))
    s.ut = <Q *> calloc(max(s.m, 1), sizeof(Q))
    s.stamp = <int32_t *> calloc(max(s.n, 1), sizeof(int32_t))
    s.bq = bq_new(s.NI)
    s.inload = <unsigned char *> calloc(max(s.M2, 1), sizeof(unsigned char))
    if (s.cost == NULL or s.T == NULL or s.HM == NULL or s.rate == NULL or s.tau == NULL
            or s.tight == NULL or s.cm == NULL or s.ut == NULL or s.stamp == NULL
            or s.inload == NULL):
        raise MemoryError()
    global q_overflow
    q_overflow = 0
    for k in range(s.m):
        s.cost[k] = q_make(cnum[k], cden[k])
        s.tau[2 * k] = q_int(0)
        s.tau[2 * k + 1] = q_int(0)

    nmerge = len(merges)
    cdef int64_t *mn = <int64_t *> malloc(max(nmerge, 1) * sizeof(int64_t))
    cdef int64_t *md = <int64_t *> malloc(max(nmerge, 1) * sizeof(int64_t))
    cdef int32_t *ma = <int32_t *> malloc(max(nmerge, 1) * sizeof(int32_t))
    cdef int32_t *mb = <int32_t *> malloc(max(nmerge, 1) * sizeof(int32_t))
    try:
        for i, (tm, a, b) in enumerate(merges):
            tm = Fraction(tm)
            if abs(tm.numerator) >= 2 ** 63 or tm.denominator >= 2 ** 63:
                raise OverflowError("merge time does not fit the compiled kernel")
            mn[i] = tm.numerator
            md[i] = tm.denominator
            ma[i] = a
            mb[i] = b

        s.repmask = (<uint64_t> -1) if K == 64 else ((<uint64_t> 1 << K) - 1)
        for i in range(K):
            s.rep[i] = i
            s.pm_of[i] = (<uint64_t> 1) << i
            v = tvert[i]
            s.T[v] |= (<uint64_t> 1) << i
            s.HM[v] |= (<uint64_t> 1) << i
            s.reached.push_back(v)
            if record:
                rr.v = v
                rr.t = q_int(0)
                rr.bits = (<uint64_t> 1) << i
                s.reach_log.push_back(rr)
        rr.v = s.rootv
        rr.t = q_int(0)
        rr.bits = (<uint64_t> 1) << root
        s.root_log.push_back(rr)

        t = q_int(0)
        mi = 0
        parts = K
        s.events = 0
        s.cur_stamp = 0
        if parts > 1:
            for i in range(K):
                s.refresh_vertex(tvert[i], t)
        with nogil:
            full = (<uint64_t> -1) if K == 64 else ((<uint64_t> 1 << K) - 1)
            while parts > 1:
                if q_overflow:
                    break
                if root_stop and s.T[s.rootv] == full:
                    stopped = True
                    break
                if mi < nmerge:
                    nm = q_make(mn[mi], md[mi])
                if bq_top(s.bq, &top) and (mi >= nmerge or q_cmp(top, nm) <= 0):
                    t = top
                    s.cur_stamp += 1
                    s.changed.clear()
                    batch.clear()
                    bq_pop_batch(s.bq, &batch)
                    for j in range(batch.size()):
                        item = batch[j]
                        s.events += 1
                        if item < s.M2:
                            e = item
                            if s.tight[e].d != 0:
                                continue
                            k = e >> 1
                            if continuous and s.ut[k].d == 0:
                                s.mark_ut(k, t)
                            s.tight[e] = t
                            if record:
                                bp.e = e
                                bp.t = t
                                bp.load = s.cost[k]
                                bp.cm = 0
                                s.bp_log.push_back(bp)
                            s.rate[e] = 0
                            s.tau[e] = s.cost[k]
                            s.cm[e] = 0
                            v = s.tail[e]
                            w = s.head[e]
                            new = s.T[v] & ~s.T[w]
                            if new:
                                s.set_reach(w, new, t)
                                s.propagate(w, t)
                            s.refresh(e ^ 1, t)
                        else:
                            k = item - s.M2
                            if s.ut[k].d == 0:
                                s.mark_ut(k, t)
                                s.refresh(2 * k, t)
                                s.refresh(2 * k + 1, t)
                    for j in range(s.changed.size()):
                        x = s.changed[j]
                        s.HM[x] = s.hit(s.T[x])
                    for j in range(s.changed.size()):
                        s.refresh_vertex(s.changed[j], t)
                    continue
                if mi >= nmerge:
                    break
                t = nm
                big = 0
                while mi < nmerge and q_cmp(q_make(mn[mi], md[mi]), t) == 0:
                    ra = s.find(ma[mi])
                    rb = s.find(mb[mi])
                    mi += 1
                    if ra == rb:
                        continue
                    lo = ra if ra < rb else rb
                    hi = rb if ra < rb else ra
                    s.rep[hi] = lo
                    s.repmask &= ~((<uint64_t> 1) << hi)
                    parts -= 1
                    big |= s.pm_of[lo] | s.pm_of[hi]
                s.events += 1
                if parts == 1:
                    break
                # part masks after all merges at this time
                for i in range(K):
                    s.pm_of[i] = 0
                for i in range(K):
                    s.pm_of[s.find(i)] |= (<uint64_t> 1) << i
                for i in range(K):
                    s.pm_of[i] = s.pm_of[s.find(i)]
                for j in range(s.reached.size()):
                    x = s.reached[j]
                    if s.T[x] & big:
                        s.HM[x] = s.hit(s.T[x])
                # only edges loaded by one of the merged parts can change
                # contributors or rate; drop finished edges on the way
                kept = 0
                for j in range(s.loading.size()):
                    e = s.loading[j]
                    if s.tight[e].d != 0 or s.cm[e] == 0:
                        s.inload[e] = 0
                        continue
                    s.loading[kept] = e
                    kept += 1
                s.loading.resize(kept)
                for j in range(kept):
                    e = s.loading[j]
                    if s.cm[e] & big:
                        s.refresh(e, t)
        if q_overflow:
            raise OverflowError("rational overflow in compiled kernel")
        if parts > 1 and not stopped:
            raise RuntimeError("merge plan ended before all terminals were merged")

        M2 = s.M2
        tn = np.zeros(M2, dtype=np.int64)
        td = np.zeros(M2, dtype=np.int64)
        ln = np.zeros(M2, dtype=np.int64)
        ld = np.ones(M2, dtype=np.int64)
        _fill(s, tn, td, ln, ld, t)
        if q_overflow:
            raise OverflowError("rational overflow in compiled kernel")
        out = {
            "t_end": qf(t),
            "tight_num": tn, "tight_den": td,
            "load_num": ln, "load_den": ld,
            "root_log": [(qf(s.root_log[j].t), int(s.root_log[j].bits)) for j in range(s.root_log.size())],
            "events": s.events,
            "stopped_early": bool(stopped),
        }
        if record:
            out["reach_log"] = [(s.reach_log[j].v, qf(s.reach_log[j].t), int(s.reach_log[j].bits))
                                for j in range(s.reach_log.size())]
            out["bp_log"] = [(s.bp_log[j].e, qf(s.bp_log[j].t), qf(s.bp_log[j].load), int(s.bp_log[j].cm))
                             for j in range(s.bp_log.size())]
            out["ut_log"] = [(s.ut_log[j].k, qf(s.ut_log[j].t), qf(s.ut_log[j].lf), qf(s.ut_log[j].lb))
                             for j in range(s.ut_log.size())]
        return out
    finally:
        free(mn); free(md); free(ma); free(mb)


cdef void _fill(_Run s, int64_t[::1] tn, int64_t[::1] td, int64_t[::1] ln, int64_t[::1] ld, Q t):
    cdef int32_t e
    cdef Q L
    for e in range(s.M2):
        if s.tight[e].d != 0:
            L = q_reduce(s.tight[e])
            tn[e] = L.n
            td[e] = L.d
        L = q_reduce(s.load(e, t))
        ln[e] = L.n
        ld[e] = L.d


def distances(int n, const int32_t[::1] out_ptr, const int32_t[::1] out_edges,
              const int32_t[::1] head, const int64_t[::1] weight, int src):
    """Integer Dijkstra; ``-1`` marks unreachable vertices."""
    dist_arr = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] dist = dist_arr
    cdef priority_queue[pair[int64_t, int32_t]] pq
    cdef pair[int64_t, int32_t] top
    cdef int64_t d
    cdef int32_t x, y, e
    cdef int p
    with nogil:
        pq.push(pair[int64_t, int32_t](0, src))
        while not pq.empty():
            top = pq.top()
            pq.pop()
            d = -top.first
            x = top.second
            if dist[x] >= 0:
                continue
            dist[x] = d
            for p in range(out_ptr[x], out_ptr[x + 1]):
                e = out_edges[p]
                y = head[e]
                if dist[y] < 0:
                    pq.push(pair[int64_t, int32_t](-(d + weight[e >> 1]), y))
    return dist_arr
