#include "mtomo/record_io.hpp"

#include <cstdio>
#include <sstream>

#include "mtomo/kvfile.hpp"

namespace mtomo::maxent {
namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

MeasurementRecord parse_record(std::string_view text) {
  const KeyValueFile kv = KeyValueFile::parse(text);
  MeasurementRecord r;
  r.dim_n = static_cast<int>(kv.require_int("n"));
  r.index_k = static_cast<int>(kv.require_int("k"));
  r.x_11 = kv.require_double("x11");
  r.x_1k = Complex(kv.require_double("re_x1k"), kv.get_double("im_x1k", 0.0));
  if (kv.has("xkk")) r.x_kk = kv.require_double("xkk");
  r.validate();
  return r;
}

std::string format_record(const MeasurementRecord& r) {
  std::ostringstream os;
  os << "n = " << r.dim_n << "\n"
     << "k = " << r.index_k << "\n"
     << "x11 = " << num(r.x_11) << "\n"
     << "re_x1k = " << num(r.x_1k.real()) << "\n"
     << "im_x1k = " << num(r.x_1k.imag()) << "\n";
  if (r.x_kk) {
    os << "xkk = " << num(*r.x_kk);
    if (r.kk_source == Source::predicted) os << "  # predicted";
    os << "\n";
  }
  return os.str();
}

}  // namespace mtomo::maxent
