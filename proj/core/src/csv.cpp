#include "plsivc/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "plsivc/errors.hpp"

namespace plsivc {

namespace {

bool iequal(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](unsigned char x, unsigned char y) {
           return std::tolower(x) == std::tolower(y);
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::optional<std::size_t> CsvTable::find(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (iequal(header[j], name)) return j;
  }
  return std::nullopt;
}

std::size_t CsvTable::index_of(std::string_view name) const {
  if (auto j = find(name)) return *j;
  throw DataError("missing column '" + std::string(name) + "'");
}

const std::vector<double>& CsvTable::column(std::string_view name) const {
  return columns[index_of(name)];
}

CsvTable parse_csv(std::istream& in, std::string_view source) {
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (blank(line)) continue;
    const auto fields = split(line);
    if (!have_header) {
      for (auto f : fields) t.header.emplace_back(f);
      t.columns.resize(t.header.size());
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < fields.size(); ++j) {
      std::string_view f = fields[j];
      if (!f.empty() && f.front() == '+') f.remove_prefix(1);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (f.empty() || ec != std::errc{} || ptr != f.data() + f.size()) {
        throw DataError(std::string(source) + ":" + std::to_string(line_no) +
                        ": non-numeric value '" + std::string(fields[j]) + "' in column '" +
                        t.header[j] + "'");
      }
      t.columns[j].push_back(v);
    }
  }
  if (!have_header) throw DataError(std::string(source) + ": empty CSV input");
  return t;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return parse_csv(in, path.string());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    out << (j ? "," : "") << table.header[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < table.rows(); ++i) {
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
      out << (j ? "," : "") << format_double(table.columns[j][i]);
    }
    out << '\n';
  }
}

Dataset dataset_from_table(const CsvTable& table, const ColumnRoles& roles) {
  const auto n = static_cast<Eigen::Index>(table.rows());
  const auto fill = [&](const std::vector<std::string>& names, Eigen::MatrixXd& block,
                        std::vector<std::string>& out_names, bool allow_constant) {
    block.resize(n, static_cast<Eigen::Index>(names.size()));
    for (std::size_t j = 0; j < names.size(); ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      if (allow_constant && names[j] == "1") {
        block.col(c).setOnes();
        out_names.emplace_back("(intercept)");
        continue;
      }
      const auto& col = table.column(names[j]);
      for (Eigen::Index i = 0; i < n; ++i) block(i, c) = col[static_cast<std::size_t>(i)];
      out_names.push_back(table.header[table.index_of(names[j])]);
    }
  };
  Dataset d;
  const auto& ycol = table.column(roles.y);
  d.y = Eigen::Map<const Eigen::VectorXd>(ycol.data(), n);
  fill(roles.u, d.u, d.u_names, false);
  fill(roles.x, d.x, d.x_names, false);
  fill(roles.z, d.z, d.z_names, true);
  return d;
}

CsvTable table_from_dataset(const Dataset& data) {
  Dataset named = data;
  named.fill_default_names();
  CsvTable t;
  const auto add = [&t](const std::string& name, const auto& col) {
    t.header.push_back(name);
    t.columns.emplace_back(col.data(), col.data() + col.size());
  };
  add("y", named.y);
  const auto block = [&](const Eigen::MatrixXd& m, const std::vector<std::string>& names) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const Eigen::VectorXd c = m.col(j);
      add(names[static_cast<std::size_t>(j)], c);
    }
  };
  block(named.u, named.u_names);
  block(named.x, named.x_names);
  block(named.z, named.z_names);
  return t;
}

}  // namespace plsivc
