#pragma once

#include "tracknet/logic.hpp"
#include "tracknet/net.hpp"

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tracknet::speclang {

// Parse/validation failure; line/col refer to the offending token.
struct SpecError : std::runtime_error {
    int line;
    int col;
    SpecError(int line_, int col_, const std::string& msg)
        : std::runtime_error("speclang: " + std::to_string(line_) + ":" + std::to_string(col_) +
                             ": " + msg),
          line(line_),
          col(col_) {}
};

// One robustness property: scalar parameters, input images, network
// declarations and a single forall over an L-inf ball.
//
//   param epsilon = 0.18823529
//   param delta = 0.1
//   input x0 = "data/image_0.pgm"
//   network N
//   forall x in ball(x0, epsilon) .
//     abs(N(x)[0] - N(x0)[0]) <= delta and abs(N(x)[1] - N(x0)[1]) <= delta
struct PropertySpec {
    std::vector<std::pair<std::string, double>> params;
    std::vector<std::pair<std::string, std::string>> inputs;  // name -> image path
    std::vector<std::string> networks;
    std::string bound_var;   // forall variable
    std::string anchor_var;  // ball center (a declared input)
    logic::ExprPtr radius;   // ball radius expression over params
    logic::FormulaPtr body;
};

PropertySpec parse_property(const std::string& text);

// Canonical formatting with minimal parentheses; numeric literals keep enough
// digits to reparse to the identical value.
std::string pretty_print(const PropertySpec& spec);

bool equal(const PropertySpec& a, const PropertySpec& b);

// Property instantiated against a concrete network: the anchor image is
// loaded and preprocessed, parameters are bound, and delta is extracted when
// the body is a conjunction of abs(N(x)[i] - N(x0)[i]) <= d atoms.
struct VerificationProblem {
    Tensor anchor;
    double epsilon = 0.0;
    bool has_delta = false;
    double delta = 0.0;
    logic::FormulaPtr body;
    std::string bound_var;
    std::string anchor_var;
    logic::Env env;  // params bound as scalars, anchor bound as image
};

VerificationProblem instantiate(const PropertySpec& spec, const Network& net,
                                const std::string& base_dir);

}  // namespace tracknet::speclang
