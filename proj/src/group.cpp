#include "equicert/group.hpp"

#include "equicert/rng.hpp"

#include <atomic>
#include <cmath>
#include <numbers>

namespace equicert {

namespace {

std::uint32_t next_table_id() {
    static std::atomic<std::uint32_t> counter{1};
    return counter.fetch_add(1);
}

}  // namespace

GroupTable GroupTable::cyclic(int order) {
    if (order < 1) throw ConfigError("cyclic group order must be >= 1");
    GroupTable t;
    t.id_ = next_table_id();
    t.identity_ = 0;
    t.compose_.assign(order, std::vector<int>(order));
    t.inverse_.resize(order);
    t.names_.resize(order);
    for (int a = 0; a < order; ++a) {
        t.names_[a] = "r" + std::to_string(a);
        t.inverse_[a] = (order - a) % order;
        for (int b = 0; b < order; ++b) t.compose_[a][b] = (a + b) % order;
    }
    return t;
}

GroupTable GroupTable::symmetric2() {
    GroupTable t;
    t.id_ = next_table_id();
    t.identity_ = 0;
    t.compose_ = {{0, 1}, {1, 0}};
    t.inverse_ = {0, 1};
    t.names_ = {"e", "s"};
    return t;
}

GroupTable GroupTable::integer_shifts(int max_abs_shift) {
    if (max_abs_shift < 0) throw ConfigError("shift range must be >= 0");
    GroupTable t;
    t.id_ = next_table_id();
    t.shift_max_ = max_abs_shift;
    const int n = 2 * max_abs_shift + 1;
    t.identity_ = max_abs_shift;  // offset 0 sits in the middle
    t.names_.resize(n);
    for (int i = 0; i < n; ++i) {
        const int off = i - max_abs_shift;
        t.names_[i] = "t" + std::string(off >= 0 ? "+" : "") + std::to_string(off);
    }
    return t;
}

GroupTable GroupTable::from_raw(std::vector<std::vector<int>> compose, std::vector<int> inverse,
                                int identity_index, std::vector<std::string> names) {
    const std::size_t n = names.size();
    if (compose.size() != n || inverse.size() != n)
        throw ConfigError("raw group table: inconsistent sizes");
    for (const auto& row : compose)
        if (row.size() != n) throw ConfigError("raw group table: ragged compose table");
    if (identity_index < 0 || static_cast<std::size_t>(identity_index) >= n)
        throw ConfigError("raw group table: identity out of range");
    GroupTable t;
    t.id_ = next_table_id();
    t.identity_ = identity_index;
    t.compose_ = std::move(compose);
    t.inverse_ = std::move(inverse);
    t.names_ = std::move(names);
    return t;
}

void GroupTable::check_member(const GroupElement& g, const char* op) const {
    if (g.table != id_)
        throw GroupMismatchError(std::string(op) + ": element belongs to a different group table");
    if (g.index < 0 || g.index >= order())
        throw GroupMismatchError(std::string(op) + ": element index out of range");
}

GroupElement GroupTable::identity() const { return {identity_, id_}; }

GroupElement GroupTable::element(int index) const {
    if (index < 0 || index >= order())
        throw GroupMismatchError("element: index out of range");
    return {index, id_};
}

std::vector<GroupElement> GroupTable::elements() const {
    std::vector<GroupElement> out;
    out.reserve(order());
    for (int i = 0; i < order(); ++i) out.push_back({i, id_});
    return out;
}

GroupElement GroupTable::compose(const GroupElement& g, const GroupElement& h) const {
    check_member(g, "compose");
    check_member(h, "compose");
    if (is_shift_group()) {
        const int off = (g.index - shift_max_) + (h.index - shift_max_);
        if (off < -shift_max_ || off > shift_max_)
            throw GroupRangeError("compose: shift " + std::to_string(off) +
                                  " outside [-" + std::to_string(shift_max_) + ", " +
                                  std::to_string(shift_max_) + "]");
        return {off + shift_max_, id_};
    }
    const int r = compose_[g.index][h.index];
    if (r < 0 || r >= order())
        throw GroupRangeError("compose: table entry out of range (closure violated)");
    return {r, id_};
}

GroupElement GroupTable::inverse(const GroupElement& g) const {
    check_member(g, "inverse");
    if (is_shift_group()) return {2 * shift_max_ - g.index, id_};
    const int r = inverse_[g.index];
    if (r < 0 || r >= order())
        throw GroupRangeError("inverse: table entry out of range");
    return {r, id_};
}

const std::string& GroupTable::name(const GroupElement& g) const {
    check_member(g, "name");
    return names_[g.index];
}

GroupElement GroupTable::by_name(const std::string& name) const {
    for (int i = 0; i < order(); ++i)
        if (names_[i] == name) return {i, id_};
    throw ConfigError("no group element named '" + name + "'");
}

int GroupTable::shift_offset(const GroupElement& g) const {
    check_member(g, "shift_offset");
    if (!is_shift_group()) throw ConfigError("shift_offset: not a shift group");
    return g.index - shift_max_;
}

GroupElement GroupTable::shift(int offset) const {
    if (!is_shift_group()) throw ConfigError("shift: not a shift group");
    if (offset < -shift_max_ || offset > shift_max_)
        throw GroupRangeError("shift: offset outside range");
    return {offset + shift_max_, id_};
}

AxiomReport verify_group_axioms(const GroupTable& table, int exhaustive_cap,
                                std::uint64_t sample_seed, long sample_count) {
    AxiomReport rep;
    const int n = table.order();
    const auto elems = table.elements();
    const auto e = table.identity();

    // For the shift backend composition is intentionally partial; axioms are
    // checked on triples whose partial products stay in range.
    auto try_compose = [&](const GroupElement& a, const GroupElement& b,
                           GroupElement& out) -> bool {
        try {
            out = table.compose(a, b);
            return true;
        } catch (const GroupRangeError&) {
            if (!table.is_shift_group()) throw;  // dense tables must be total
            return false;
        }
    };

    auto fail = [&](bool& flag, const std::string& what) {
        if (rep.witness.empty()) rep.witness = what;
        flag = false;
    };

    for (const auto& g : elems) {
        GroupElement r{};
        ++rep.cases_checked;
        if (try_compose(e, g, r) && r != g)
            fail(rep.identity_ok, "e*" + table.name(g) + " != " + table.name(g));
        ++rep.cases_checked;
        if (try_compose(g, e, r) && r != g)
            fail(rep.identity_ok, table.name(g) + "*e != " + table.name(g));
        const auto gi = table.inverse(g);
        ++rep.cases_checked;
        if (try_compose(g, gi, r) && r != e)
            fail(rep.inverse_ok, table.name(g) + "*inv != e");
        ++rep.cases_checked;
        if (try_compose(gi, g, r) && r != e)
            fail(rep.inverse_ok, "inv*" + table.name(g) + " != e");
    }

    auto check_assoc = [&](const GroupElement& a, const GroupElement& b, const GroupElement& c) {
        GroupElement ab{}, bc{}, left{}, right{};
        if (!try_compose(a, b, ab) || !try_compose(b, c, bc)) return;
        const bool l_ok = try_compose(ab, c, left);
        const bool r_ok = try_compose(a, bc, right);
        ++rep.cases_checked;
        // a*(b*c) and (a*b)*c reach the same total offset, so for shifts
        // either both exist or the triple is skipped.
        if (l_ok != r_ok)
            fail(rep.associativity_ok, "partial associativity mismatch at (" + table.name(a) +
                                           "," + table.name(b) + "," + table.name(c) + ")");
        else if (l_ok && left != right)
            fail(rep.associativity_ok, "(" + table.name(a) + "*" + table.name(b) + ")*" +
                                           table.name(c) + " != " + table.name(a) + "*(" +
                                           table.name(b) + "*" + table.name(c) + ")");
    };

    if (n <= exhaustive_cap) {
        for (const auto& a : elems)
            for (const auto& b : elems)
                for (const auto& c : elems) check_assoc(a, b, c);
    } else {
        Rng rng(sample_seed);
        for (long i = 0; i < sample_count; ++i) {
            const auto a = elems[static_cast<std::size_t>(rng.next_u64() % n)];
            const auto b = elems[static_cast<std::size_t>(rng.next_u64() % n)];
            const auto c = elems[static_cast<std::size_t>(rng.next_u64() % n)];
            check_assoc(a, b, c);
        }
    }

    // Closure on dense tables: every entry must be a valid index.  (Shift
    // composition is range-checked on every call instead.)
    if (!table.is_shift_group()) {
        for (const auto& a : elems)
            for (const auto& b : elems) {
                ++rep.cases_checked;
                try {
                    table.compose(a, b);
                } catch (const GroupRangeError&) {
                    fail(rep.closure_ok,
                         table.name(a) + "*" + table.name(b) + " not in the table");
                }
            }
    }
    return rep;
}

GroupAction::GroupAction(GroupPtr table, int dim, InputRepKind kind)
    : table_(std::move(table)), dim_(dim), kind_(kind) {
    if (!table_) throw ConfigError("action: null group table");
    if (dim_ < 1) throw ConfigError("action: dimension must be >= 1");
}

GroupAction GroupAction::coordinate_reversal(GroupPtr table, int dim) {
    if (table->order() != 2)
        throw ConfigError("coordinate_reversal action needs a 2-element group");
    return GroupAction(std::move(table), dim, InputRepKind::coordinate_reversal);
}

GroupAction GroupAction::planar_rotation(GroupPtr table, int dim) {
    if (table->is_shift_group())
        throw ConfigError("planar_rotation action needs a cyclic table");
    if (dim % 2 != 0) throw ConfigError("planar_rotation action needs even dimension");
    return GroupAction(std::move(table), dim, InputRepKind::planar_rotation);
}

GroupAction GroupAction::index_shift(GroupPtr table, int window) {
    if (!table->is_shift_group())
        throw ConfigError("index_shift action needs a shift group");
    if (window <= 2 * table->max_abs_shift())
        throw ConfigError("index_shift action: window too small for the shift range");
    return GroupAction(std::move(table), window, InputRepKind::index_shift);
}

Vec GroupAction::act_input(const GroupElement& g, const Vec& x) const {
    if (x.size() != dim_)
        throw DimensionError("act_input: vector size " + std::to_string(x.size()) +
                             " != action dimension " + std::to_string(dim_));
    switch (kind_) {
        case InputRepKind::coordinate_reversal: {
            table_->name(g);  // membership check
            if (g == table_->identity()) return x;
            return x.reverse();
        }
        case InputRepKind::planar_rotation: {
            table_->name(g);
            const double ang =
                2.0 * std::numbers::pi * static_cast<double>(g.index) / table_->order();
            const double c = std::cos(ang), s = std::sin(ang);
            Vec out(dim_);
            for (int i = 0; i < dim_; i += 2) {
                out[i] = c * x[i] - s * x[i + 1];
                out[i + 1] = s * x[i] + c * x[i + 1];
            }
            return out;
        }
        case InputRepKind::index_shift: {
            const int off = table_->shift_offset(g);
            Vec out = Vec::Zero(dim_);
            for (int i = 0; i < dim_; ++i) {
                if (x[i] == 0.0) continue;  // zeros are background, free to fall anywhere
                const int j = i + off;
                if (j < 0 || j >= dim_)
                    throw GroupRangeError("act_input: shift pushes support outside the window");
                out[j] = x[i];
            }
            return out;
        }
    }
    throw NumericError("act_input: unreachable");
}

bool GroupAction::can_act(const GroupElement& g, const Vec& x) const {
    if (kind_ != InputRepKind::index_shift) return true;
    const int off = table_->shift_offset(g);
    for (int i = 0; i < dim_; ++i) {
        if (x[i] == 0.0) continue;
        const int j = i + off;
        if (j < 0 || j >= dim_) return false;
    }
    return true;
}

double GroupAction::act_output(const GroupElement& g, double y) const {
    table_->name(g);  // membership check; the action itself is trivial
    return y;
}

Mat GroupAction::input_matrix(const GroupElement& g) const {
    if (kind_ == InputRepKind::index_shift)
        throw ConfigError("input_matrix: shift action is partial, no dense matrix");
    Mat m(dim_, dim_);
    for (int j = 0; j < dim_; ++j) m.col(j) = act_input(g, Vec::Unit(dim_, j));
    return m;
}

OrbitResolver::OrbitResolver(GroupAction action, CanonicalRule rule, int align_base,
                             double angle_tol)
    : action_(std::move(action)), rule_(rule), align_base_(align_base), angle_tol_(angle_tol) {
    switch (rule_) {
        case CanonicalRule::lex_max:
            if (action_.input_kind() == InputRepKind::index_shift)
                throw ConfigError("lex_max rule does not apply to shift actions");
            break;
        case CanonicalRule::angle_sector:
            if (action_.input_kind() != InputRepKind::planar_rotation)
                throw ConfigError("angle_sector rule needs a rotation action");
            break;
        case CanonicalRule::support_left_align:
            if (action_.input_kind() != InputRepKind::index_shift)
                throw ConfigError("support_left_align rule needs a shift action");
            if (align_base_ < 0 || align_base_ >= action_.dim())
                throw ConfigError("support_left_align: base outside the window");
            break;
    }
}

void OrbitResolver::check_free(const Vec& x) const {
    const auto& table = action_.group();
    for (const auto& g : table.elements()) {
        if (g == table.identity()) continue;
        if (!action_.can_act(g, x)) continue;
        if ((action_.act_input(g, x) - x).lpNorm<Eigen::Infinity>() <= 1e-12)
            throw NonFreeOrbitError("input is fixed by " + table.name(g) +
                                    "; orbit decomposition undefined");
    }
}

OrbitDecomposition OrbitResolver::resolve(const Vec& x) const {
    if (x.size() != action_.dim()) throw DimensionError("resolve: wrong input dimension");
    const auto& table = action_.group();

    switch (rule_) {
        case CanonicalRule::lex_max: {
            check_free(x);
            // Representative = lexicographically largest orbit point.  Free
            // action means the maximum is attained by exactly one element.
            GroupElement best = table.identity();
            Vec best_v = x;
            for (const auto& g : table.elements()) {
                Vec v = action_.act_input(g, x);
                for (int i = 0; i < v.size(); ++i) {
                    if (v[i] > best_v[i]) {
                        best_v = v;
                        best = g;
                        break;
                    }
                    if (v[i] < best_v[i]) break;
                }
            }
            return {best_v, table.inverse(best)};
        }
        case CanonicalRule::angle_sector: {
            // Sector index from the first coordinate pair with usable norm;
            // snapping keeps orbit mates consistent next to boundaries.
            int lead = -1;
            for (int i = 0; i < x.size(); i += 2) {
                if (std::hypot(x[i], x[i + 1]) > 1e-12) {
                    lead = i;
                    break;
                }
            }
            if (lead < 0)
                throw NonFreeOrbitError("zero input has no angular representative");
            check_free(x);
            const int k = table.order();
            const double width = 2.0 * std::numbers::pi / k;
            double ang = std::atan2(x[lead + 1], x[lead]);
            if (ang < 0) ang += 2.0 * std::numbers::pi;
            double jf = ang / width;
            int j = static_cast<int>(std::floor(jf));
            if (jf - j > 1.0 - angle_tol_) ++j;  // snap up across the boundary
            j %= k;
            const auto g = table.element(j);
            return {action_.act_input(table.inverse(g), x), g};
        }
        case CanonicalRule::support_left_align: {
            int first = -1;
            for (int i = 0; i < x.size(); ++i) {
                if (x[i] != 0.0) {
                    first = i;
                    break;
                }
            }
            if (first < 0)
                throw NonFreeOrbitError("empty support has no shift representative");
            const int off = first - align_base_;
            GroupElement g{};
            try {
                g = table.shift(off);
            } catch (const GroupRangeError&) {
                throw GroupRangeError("resolve: support offset " + std::to_string(off) +
                                      " outside the shift range");
            }
            const auto g_inv = table.inverse(g);
            if (!action_.can_act(g_inv, x))
                throw GroupRangeError("resolve: aligning pushes support outside the window");
            return {action_.act_input(g_inv, x), g};
        }
    }
    throw NumericError("resolve: unreachable");
}

bool OrbitResolver::is_canonical(const Vec& x, double tol) const {
    const auto d = resolve(x);
    return d.group_part == action_.group().identity() &&
           (d.representative - x).lpNorm<Eigen::Infinity>() <= tol;
}

}  // namespace equicert
