#pragma once

#include <map>

#include "ckr/core.hpp"

namespace ckr {

// Token-level prefix tree over pattern token sequences, with end-of-pattern
// markers. Node 0 is the root.
class PatternTrie {
  public:
    static constexpr int kRoot = 0;
    static constexpr int kNoNode = -1;

    PatternTrie() : nodes_(1) {}

    void insert(const TokenSeq& pattern) {
        int node = kRoot;
        for (const auto& tok : pattern) {
            auto it = nodes_[node].children.find(tok);
            if (it == nodes_[node].children.end()) {
                int next = static_cast<int>(nodes_.size());
                nodes_[node].children[tok] = next;
                nodes_.push_back({});
                node = next;
            } else {
                node = it->second;
            }
        }
        if (!nodes_[node].terminal) {
            nodes_[node].terminal = true;
            ++size_;
        }
    }

    int step(int node, const Token& tok) const {
        auto it = nodes_[node].children.find(tok);
        return it == nodes_[node].children.end() ? kNoNode : it->second;
    }

    // Advances through a whole token sequence; kNoNode if any step fails.
    int walk(int node, const TokenSeq& toks) const {
        for (const auto& t : toks) {
            node = step(node, t);
            if (node == kNoNode) return kNoNode;
        }
        return node;
    }

    bool terminal(int node) const { return nodes_[node].terminal; }

    bool contains(const TokenSeq& pattern) const {
        int node = walk(kRoot, pattern);
        return node != kNoNode && terminal(node);
    }

    bool empty() const { return size_ == 0; }
    size_t size() const { return size_; }

    std::vector<TokenSeq> enumerate() const {
        std::vector<TokenSeq> out;
        TokenSeq prefix;
        enumerate_from(kRoot, prefix, out);
        return out;
    }

  private:
    struct Node {
        std::map<Token, int> children;
        bool terminal = false;
    };

    void enumerate_from(int node, TokenSeq& prefix,
                        std::vector<TokenSeq>& out) const {
        if (nodes_[node].terminal) out.push_back(prefix);
        for (const auto& [tok, child] : nodes_[node].children) {
            prefix.push_back(tok);
            enumerate_from(child, prefix, out);
            prefix.pop_back();
        }
    }

    std::vector<Node> nodes_;
    size_t size_ = 0;
};

}  // namespace ckr
