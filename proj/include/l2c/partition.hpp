#pragma once

#include <map>
#include <string>
#include <vector>

#include "l2c/graph.hpp"

namespace l2c {

using ClusterId = std::uint32_t;

/// Assignment of variables 0..n-1 to clusters 0..k-1, every cluster non-empty.
class Partition {
public:
    Partition() = default;

    /// Labels must already be 0..k-1 with no gaps.
    explicit Partition(std::vector<ClusterId> assignment, std::vector<std::string> names = {})
        : assignment_(std::move(assignment)), names_(std::move(names)) {
        ClusterId k = 0;
        for (ClusterId c : assignment_) k = std::max<ClusterId>(k, c + 1);
        members_.assign(k, {});
        for (VarId v = 0; v < assignment_.size(); ++v) members_[assignment_[v]].push_back(v);
        for (ClusterId c = 0; c < k; ++c)
            if (members_[c].empty()) throw InputError("cluster " + std::to_string(c) + " is empty");
        if (!names_.empty() && names_.size() != k) throw InputError("cluster name count does not match clusters");
    }

    /// Arbitrary labels; clusters are renumbered by their smallest member.
    template <class Label>
    static Partition from_labels(const std::vector<Label>& labels) {
        std::map<Label, ClusterId> remap;
        std::vector<ClusterId> a(labels.size());
        for (std::size_t v = 0; v < labels.size(); ++v) {
            auto [it, fresh] = remap.try_emplace(labels[v], static_cast<ClusterId>(remap.size()));
            a[v] = it->second;
        }
        return Partition(std::move(a));
    }

    static Partition singletons(std::size_t n) {
        std::vector<ClusterId> a(n);
        for (std::size_t v = 0; v < n; ++v) a[v] = static_cast<ClusterId>(v);
        return Partition(std::move(a));
    }

    std::size_t num_vars() const { return assignment_.size(); }
    std::size_t num_clusters() const { return members_.size(); }

    ClusterId of(VarId v) const {
        if (v >= assignment_.size()) throw InputError("variable " + std::to_string(v) + " not covered by partition");
        return assignment_[v];
    }
    const std::vector<VarId>& members(ClusterId c) const {
        check_cluster(c);
        return members_[c];
    }
    std::size_t size(ClusterId c) const { return members(c).size(); }
    const std::vector<ClusterId>& assignment() const { return assignment_; }

    std::vector<std::size_t> cluster_sizes() const {
        std::vector<std::size_t> s;
        for (auto& m : members_) s.push_back(m.size());
        return s;
    }

    std::string name(ClusterId c) const {
        check_cluster(c);
        return names_.empty() ? "C" + std::to_string(c + 1) : names_[c];
    }
    const std::vector<std::string>& names() const { return names_; }

    ClusterId find(const std::string& name) const {
        for (ClusterId c = 0; c < num_clusters(); ++c)
            if (this->name(c) == name) return c;
        throw InputError("unknown cluster '" + name + "'");
    }

    void check_cluster(ClusterId c) const {
        if (c >= members_.size()) throw InputError("unknown cluster " + std::to_string(c));
    }

    NodeSet members_of(const std::set<ClusterId>& cs) const {
        NodeSet out;
        for (ClusterId c : cs) out.insert(members(c).begin(), members(c).end());
        return out;
    }

    friend bool operator==(const Partition& a, const Partition& b) { return a.assignment_ == b.assignment_; }

private:
    std::vector<ClusterId> assignment_;
    std::vector<std::vector<VarId>> members_;
    std::vector<std::string> names_;
};

}  // namespace l2c
