#pragma once

#include "equicert/common.hpp"

#include <memory>
#include <string>
#include <vector>

namespace equicert {

// Element of a specific GroupTable.  The table id is carried along so that
// combining elements from different tables is caught instead of silently
// producing garbage indices.
struct GroupElement {
    int index = -1;
    std::uint32_t table = 0;

    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.index == b.index && a.table == b.table;
    }
    friend bool operator!=(const GroupElement& a, const GroupElement& b) { return !(a == b); }
};

// Finite group given by explicit composition/inverse tables, plus a
// bounded-window variant for integer shifts where composition is partial:
// combining t_a and t_b is defined only while |a+b| stays inside the
// declared range.
class GroupTable {
public:
    // Rotations r_0..r_{k-1}, r_a * r_b = r_{(a+b) mod k}.
    static GroupTable cyclic(int order);

    // Two elements {e, s} with s*s = e (coordinate swap / order-2 group).
    static GroupTable symmetric2();

    // Shifts t_{-max}..t_{+max}; composition throws GroupRangeError when the
    // summed offset leaves [-max, +max].
    static GroupTable integer_shifts(int max_abs_shift);

    // Raw constructor used by tests to inject broken tables; performs no
    // validation beyond shape checks.
    static GroupTable from_raw(std::vector<std::vector<int>> compose,
                               std::vector<int> inverse,
                               int identity_index,
                               std::vector<std::string> names);

    int order() const { return static_cast<int>(names_.size()); }
    std::uint32_t id() const { return id_; }
    bool is_shift_group() const { return shift_max_ >= 0; }

    GroupElement identity() const;
    GroupElement element(int index) const;
    std::vector<GroupElement> elements() const;

    GroupElement compose(const GroupElement& g, const GroupElement& h) const;
    GroupElement inverse(const GroupElement& g) const;

    const std::string& name(const GroupElement& g) const;
    GroupElement by_name(const std::string& name) const;

    // Shift-group accessors.
    int shift_offset(const GroupElement& g) const;
    GroupElement shift(int offset) const;
    int max_abs_shift() const { return shift_max_; }

private:
    GroupTable() = default;
    void check_member(const GroupElement& g, const char* op) const;

    std::uint32_t id_ = 0;
    int identity_ = 0;
    int shift_max_ = -1;                      // >= 0 marks the shift backend
    std::vector<std::vector<int>> compose_;   // dense backend
    std::vector<int> inverse_;
    std::vector<std::string> names_;
};

using GroupPtr = std::shared_ptr<const GroupTable>;

// Result of checking the group axioms on a table.  For orders above
// `exhaustive_cap` the associativity scan samples triples instead of running
// the full cube; everything checked is counted.
struct AxiomReport {
    bool closure_ok = true;
    bool identity_ok = true;
    bool inverse_ok = true;
    bool associativity_ok = true;
    long cases_checked = 0;
    std::string witness;  // first offending combination, human-readable

    bool pass() const { return closure_ok && identity_ok && inverse_ok && associativity_ok; }
};

AxiomReport verify_group_axioms(const GroupTable& table, int exhaustive_cap = 64,
                                std::uint64_t sample_seed = 7, long sample_count = 20000);

// How the group moves inputs in R^d.  Outputs are scalars acted on
// trivially, so equivariance of f reads f(g.x) = f(x)'s averaged analogue
// with the output action dropped.
enum class InputRepKind { coordinate_reversal, planar_rotation, index_shift };

class GroupAction {
public:
    // symmetric2 acting by reversing coordinate order (on R^2: a swap).
    static GroupAction coordinate_reversal(GroupPtr table, int dim);

    // cyclic(k) acting on R^dim (dim even) by rotating each consecutive
    // coordinate pair by 2*pi*j/k.
    static GroupAction planar_rotation(GroupPtr table, int dim);

    // integer_shifts acting on a length-`window` signal by index
    // translation.  Only defined while every nonzero entry stays inside the
    // window; otherwise GroupRangeError.
    static GroupAction index_shift(GroupPtr table, int window);

    const GroupTable& group() const { return *table_; }
    const GroupPtr& group_ptr() const { return table_; }
    int dim() const { return dim_; }
    InputRepKind input_kind() const { return kind_; }

    Vec act_input(const GroupElement& g, const Vec& x) const;
    // Whether act_input is defined (always true except shifts off-window).
    bool can_act(const GroupElement& g, const Vec& x) const;

    // Trivial output action: labels are untouched.
    double act_output(const GroupElement& g, double y) const;

    // Dense matrix of the input representation; shifts are excluded since
    // their action is partial rather than linear on all of R^window.
    Mat input_matrix(const GroupElement& g) const;

private:
    GroupAction(GroupPtr table, int dim, InputRepKind kind);
    GroupPtr table_;
    int dim_ = 0;
    InputRepKind kind_;
};

// Canonicalization rule selecting one representative per orbit.
enum class CanonicalRule {
    lex_max,            // representative is the lexicographically largest orbit point
    angle_sector,       // leading nonzero pair's angle lies in [0, 2*pi/order)
    support_left_align  // first nonzero index equals the alignment base
};

struct OrbitDecomposition {
    Vec representative;
    GroupElement group_part;  // act_input(group_part, representative) == input
};

// Splits x into (representative, group element).  Exact on the discrete
// rules; the angular rule snaps within `angle_tol` of sector boundaries so
// orbit mates land in the same sector despite rounding.
class OrbitResolver {
public:
    OrbitResolver(GroupAction action, CanonicalRule rule, int align_base = 0,
                  double angle_tol = 1e-9);

    OrbitDecomposition resolve(const Vec& x) const;  // NonFreeOrbitError on stabilized inputs
    bool is_canonical(const Vec& x, double tol = 1e-9) const;

    const GroupAction& action() const { return action_; }
    CanonicalRule rule() const { return rule_; }
    int align_base() const { return align_base_; }

private:
    void check_free(const Vec& x) const;
    GroupAction action_;
    CanonicalRule rule_;
    int align_base_;
    double angle_tol_;
};

}  // namespace equicert
