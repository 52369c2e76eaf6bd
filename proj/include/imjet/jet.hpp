#pragma once

#include "imjet/symform.hpp"

#include <json.hpp>

#include <vector>

namespace imjet {

/// Polynomial of degree <= n stored as raw symmetric forms P_0..P_n;
/// evaluation applies the 1/k! weights: J(xi) = sum_k P_k(xi)/k!.
class Jet {
public:
    static constexpr const char* kNormalization = "factorial";

    Jet() = default;
    Jet(int order, int dim_in, int dim_out); // all components zero
    explicit Jet(std::vector<SymMultiForm> components);

    int order() const { return static_cast<int>(components_.size()) - 1; }
    int dim_in() const { return dim_in_; }
    int dim_out() const { return dim_out_; }

    const SymMultiForm& component(int k) const { return components_.at(k); }
    SymMultiForm& component(int k) { return components_.at(k); }
    const std::vector<SymMultiForm>& components() const { return components_; }

    Vec eval(const Vec& xi) const;
    /// Derivative of eval at xi, a dim_out x dim_in matrix.
    Mat derivative(const Vec& xi) const;
    Jet truncate(int m) const;
    /// Same jet with the constant term removed.
    Jet truncated_jet() const;

private:
    int dim_in_ = 0;
    int dim_out_ = 0;
    std::vector<SymMultiForm> components_;
};

nlohmann::json to_json(const SymMultiForm& f);
nlohmann::json to_json(const Jet& j);
SymMultiForm form_from_json(const nlohmann::json& j, int dim_in, int dim_out);
Jet jet_from_json(const nlohmann::json& j);

} // namespace imjet
