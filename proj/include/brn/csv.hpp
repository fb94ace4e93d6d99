#pragma once

/**
 * @file csv.hpp
 * @brief Minimal CSV emitter: one header row, fixed column order, floats at
 * 6 significant digits.
 */

#include "brn/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace brn {

inline std::string format_number(double v)
{
   if (std::isnan(v))
      return "nan";
   if (std::isinf(v))
      return v > 0 ? "inf" : "-inf";
   if (v == 0.0)
      return "0"; // folds -0
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.6g", v);
   return buf;
}

class CsvWriter {
public:
   CsvWriter(std::ostream& out, std::vector<std::string> header)
      : out_(out), columns_(header.size())
   {
      write_row(header);
   }

   class Row {
   public:
      explicit Row(CsvWriter& w) : w_(w) {}
      Row& operator<<(double v) { return text(format_number(v)); }
      Row& operator<<(int v) { return text(std::to_string(v)); }
      Row& operator<<(long long v) { return text(std::to_string(v)); }
      Row& operator<<(unsigned long long v) { return text(std::to_string(v)); }
      Row& operator<<(unsigned long v) { return text(std::to_string(v)); }
      Row& operator<<(bool v) { return text(v ? "1" : "0"); }
      Row& operator<<(const char* v) { return text(v); }
      Row& operator<<(const std::string& v) { return text(v); }
      Row& text(std::string v)
      {
         cells_.push_back(std::move(v));
         return *this;
      }
      ~Row() noexcept(false) { w_.write_row(cells_); }

   private:
      CsvWriter& w_;
      std::vector<std::string> cells_;
   };

   Row row() { return Row(*this); }

private:
   static std::string escape(const std::string& cell)
   {
      if (cell.find_first_of(",\"\n") == std::string::npos)
         return cell;
      std::string q = "\"";
      for (char c : cell) {
         if (c == '"')
            q += '"';
         q += c;
      }
      return q + "\"";
   }

   void write_row(const std::vector<std::string>& cells)
   {
      if (cells.size() != columns_)
         throw Error("csv: row has " + std::to_string(cells.size()) + " cells, expected "
            + std::to_string(columns_));
      for (std::size_t i = 0; i < cells.size(); ++i)
         out_ << (i ? "," : "") << escape(cells[i]);
      out_ << '\n';
   }

   std::ostream& out_;
   std::size_t columns_;
};

} // namespace brn
