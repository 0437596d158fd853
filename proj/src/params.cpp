#include "pmcast/params.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include "pmcast/errors.hpp"

namespace pmcast::ad {

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.size(), 0.0) {}

void Parameter::zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }

Parameter& ParameterSet::add(std::string name, Tensor value) {
  for (const auto& p : params_) {
    if (p->name == name) throw ContractError("duplicate parameter name '" + name + "'");
  }
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
  return *params_.back();
}

Parameter& ParameterSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ContractError("no parameter named '" + name + "'");
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

void ParameterSet::save(std::ostream& out) const {
  out << "pmcast-params 1 " << params_.size() << '\n';
  char buf[64];
  for (const auto& p : params_) {
    out << p->name << ' ' << p->value.rank();
    for (auto d : p->value.shape()) out << ' ' << d;
    out << '\n';
    bool first = true;
    for (double v : p->value.values()) {
      auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
      if (ec != std::errc{}) throw std::runtime_error("failed to format parameter value");
      if (!first) out << ' ';
      out.write(buf, end - buf);
      first = false;
    }
    out << '\n';
  }
}

namespace {

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw std::runtime_error("bad parameter value '" + token + "'");
  }
  return v;
}

}  // namespace

void ParameterSet::load(std::istream& in) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version >> count) || magic != "pmcast-params" || version != 1) {
    throw std::runtime_error("not a pmcast parameter file");
  }
  if (count != params_.size()) {
    throw ContractError("checkpoint has " + std::to_string(count) + " parameters, model has " +
                        std::to_string(params_.size()));
  }
  for (auto& p : params_) {
    std::string name;
    std::size_t rank = 0;
    in >> name >> rank;
    Shape shape(rank);
    for (auto& d : shape) in >> d;
    if (!in) throw std::runtime_error("truncated parameter header");
    if (name != p->name || shape != p->value.shape()) {
      throw ContractError("checkpoint parameter '" + name + "' " + shape_string(shape) +
                          " does not match '" + p->name + "' " + shape_string(p->value.shape()));
    }
    std::string token;
    for (auto& v : p->value.values()) {
      if (!(in >> token)) throw std::runtime_error("truncated values for '" + name + "'");
      v = parse_double(token);
    }
  }
}

void ParameterSet::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  save(out);
}

void ParameterSet::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  load(in);
}

void ParameterSet::assign_values(const ParameterSet& other) {
  if (other.size() != size()) throw ContractError("parameter set layout mismatch");
  for (std::size_t i = 0; i < size(); ++i) {
    if (other[i].value.shape() != (*this)[i].value.shape()) {
      throw ContractError("parameter set layout mismatch at '" + (*this)[i].name + "'");
    }
    (*this)[i].value = other[i].value;
  }
}

}  // namespace pmcast::ad
