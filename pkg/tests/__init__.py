# tests package (starter)
