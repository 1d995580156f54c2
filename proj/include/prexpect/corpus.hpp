#pragma once

#include <string>
#include <vector>

#include "prexpect/ast.hpp"
#include "prexpect/parser.hpp"

namespace prexpect {

struct CorpusEntry {
    std::string name;
    std::string description;
    std::string source;
};

// Built-in example programs used by the CLI and the test suites.
inline const std::vector<CorpusEntry>& corpus() {
    static const std::vector<CorpusEntry> entries = {
        {"coins",
         "flips a fair coin into x and a 1/3-biased coin into y",
         "var x : 0..1;\n"
         "var y : 0..1;\n"
         "main {\n"
         "  { x := 0 } [1/2] { x := 1 };\n"
         "  { y := 0 } [1/3] { y := 1 }\n"
         "}\n"},
        {"rec3",
         "fair choice between stopping and three recursive self-calls; terminates "
         "with probability (sqrt(5)-1)/2",
         "proc P {\n"
         "  { skip } [1/2] { call P; call P; call P }\n"
         "}\n"
         "main { call P }\n"},
        {"fact",
         "faulty factorial recursion: decreases x by one or two before the call and "
         "restores it after; accumulator writes are kept as unit-cost skips",
         "var x : -2..6;\n"
         "proc F {\n"
         "  if (x <= 0) {\n"
         "    skip\n"
         "  } else {\n"
         "    { x := x - 1; call F; x := x + 1 } [5/6] { x := x - 2; call F; x := x + 2 };\n"
         "    skip\n"
         "  }\n"
         "}\n"
         "main { call F }\n"},
        {"binsearch",
         "randomized binary search with a uniformly chosen pivot over a read-only "
         "sorted array parameter of size 6",
         "param a : array int;\n"
         "param val : int;\n"
         "var left : 0..5;\n"
         "var right : 0..5;\n"
         "var mid : 0..5;\n"
         "proc B {\n"
         "  mid := uniform(left, right);\n"
         "  if (left < right) {\n"
         "    if (a[mid] < val) {\n"
         "      left := min(mid + 1, right);\n"
         "      call B\n"
         "    } else {\n"
         "      if (a[mid] > val) {\n"
         "        right := max(mid - 1, left);\n"
         "        call B\n"
         "      } else {\n"
         "        skip\n"
         "      }\n"
         "    }\n"
         "  } else {\n"
         "    skip\n"
         "  }\n"
         "}\n"
         "main { call B }\n"},
        {"evenodd",
         "mutually recursive pair: Even stops or calls Odd, Odd aborts or calls Even; "
         "termination probabilities 2/3 and 1/3",
         "proc Even {\n"
         "  { skip } [1/2] { call Odd }\n"
         "}\n"
         "proc Odd {\n"
         "  { abort } [1/2] { call Even }\n"
         "}\n"
         "main { call Even }\n"},
        {"skiporabort",
         "fair choice between skip and abort: finite expected runtime yet terminates "
         "only with probability 1/2",
         "main { { skip } [1/2] { abort } }\n"},
        {"randomwalk",
         "symmetric random walk on 0..8 written as a while loop, stopping at the "
         "boundary",
         "var x : 0..8;\n"
         "main {\n"
         "  while (0 < x && x < 8) {\n"
         "    { x := x - 1 } [1/2] { x := x + 1 }\n"
         "  }\n"
         "}\n"},
    };
    return entries;
}

inline const CorpusEntry* find_corpus(const std::string& name) {
    for (const auto& e : corpus())
        if (e.name == name) return &e;
    return nullptr;
}

inline Program load_corpus(const std::string& name) {
    const CorpusEntry* e = find_corpus(name);
    if (!e) throw AnalysisError("no corpus program named '" + name + "'");
    return parse_program(SourceUnit{e->source, "<corpus:" + name + ">"});
}

} // namespace prexpect
